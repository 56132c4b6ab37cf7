//! Rearrangements, Lorentz norms and quasi-norms, the `psi` potential and
//! its gradient, and the exact Lipschitz constant over the Euclidean sphere.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Non-increasing weights in `[0, 1]` with first entry exactly one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSequence {
    values: Vec<f64>,
}

impl WeightSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("weight sequence"));
        }
        if values[0] != 1.0 {
            return Err(invalid(format!("first weight must equal 1, got {}", values[0])));
        }
        for (i, w) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(w) {
                return Err(invalid(format!("weight {} = {w} is outside [0, 1]", i + 1)));
            }
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(invalid(format!(
                "weights must be non-increasing: w[{}] = {} < w[{}] = {}",
                i + 1,
                values[i],
                i + 2,
                values[i + 1]
            )));
        }
        Ok(Self { values })
    }

    /// All weights equal to one (the plain `l_p` norm).
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl<'de> Deserialize<'de> for WeightSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            values: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        WeightSequence::new(raw.values).map_err(serde::de::Error::custom)
    }
}

/// The power family `w_i = i^{-r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerWeights {
    pub r: f64,
    pub n: usize,
}

impl PowerWeights {
    pub fn new(r: f64, n: usize) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(invalid(format!("power-weight exponent r must be finite and >= 0, got {r}")));
        }
        if n == 0 {
            return Err(Error::Empty("power weights need n >= 1"));
        }
        Ok(Self { r, n })
    }

    pub fn materialize(&self) -> WeightSequence {
        let values = (1..=self.n).map(|i| (i as f64).powf(-self.r)).collect();
        WeightSequence { values }
    }
}

/// A weight sequence and an exponent `p > 0`.
///
/// For `p >= 1` the induced functional is a norm; for `0 < p < 1` it is a
/// quasi-norm with constant `2^{1/p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzParams {
    weights: WeightSequence,
    p: f64,
    /// Set when the weights came from the power family.
    power_r: Option<f64>,
}

impl LorentzParams {
    pub fn new(weights: WeightSequence, p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Self { weights, p, power_r: None })
    }

    pub fn power(r: f64, n: usize, p: f64) -> Result<Self> {
        check_p(p)?;
        let w = PowerWeights::new(r, n)?;
        Ok(Self { weights: w.materialize(), p, power_r: Some(r) })
    }

    pub fn weights(&self) -> &[f64] {
        self.weights.values()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn power_r(&self) -> Option<f64> {
        self.power_r
    }

    pub fn is_norm(&self) -> bool {
        self.p >= 1.0
    }

    /// Constant in `|x+y| <= K (|x| + |y|)`: 1 for norms, `2^{1/p}` otherwise.
    pub fn quasi_norm_constant(&self) -> f64 {
        if self.p >= 1.0 {
            1.0
        } else {
            2f64.powf(1.0 / self.p)
        }
    }

    fn is_flat(&self) -> bool {
        self.weights.values().iter().all(|&w| w == 1.0)
    }

    /// Norm of `x` without input validation; `scratch` is reused between calls.
    ///
    /// Skips the rearrangement when all weights equal one.
    pub fn norm_unchecked(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        debug_assert_eq!(x.len(), self.n());
        if self.is_flat() {
            let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if max == 0.0 {
                return 0.0;
            }
            let s: f64 = x.iter().map(|v| pow_abs(v.abs() / max, self.p)).sum();
            return max * s.powf(1.0 / self.p);
        }
        fill_desc(x, scratch);
        norm_of_sorted(self.weights.values(), scratch, self.p)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("exponent p must be finite and > 0, got {p}")))
    }
}

/// `x^p` for `x >= 0` with exact fast paths for common exponents.
#[inline]
pub(crate) fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else if p == 1.5 {
        x * x.sqrt()
    } else if p == 3.0 {
        x * x * x
    } else if p == 4.0 {
        let y = x * x;
        y * y
    } else {
        x.powf(p)
    }
}

fn fill_desc(x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(x.iter().map(|v| v.abs()));
    out.sort_unstable_by(|a, b| b.total_cmp(a));
}

fn norm_of_sorted(w: &[f64], sorted: &[f64], p: f64) -> f64 {
    let max = sorted.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0.0;
    }
    let s: f64 = w.iter().zip(sorted).map(|(wi, xi)| wi * pow_abs(xi / max, p)).sum();
    max * s.powf(1.0 / p)
}

fn check_vector(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Empty("vector"));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(invalid(format!("entry {i} is not finite ({})", x[i])));
    }
    Ok(())
}

fn check_dim(params: &LorentzParams, x: &[f64]) -> Result<()> {
    check_vector(x)?;
    if x.len() != params.n() {
        return Err(Error::DimensionMismatch { expected: params.n(), got: x.len() });
    }
    Ok(())
}

/// Non-increasing rearrangement of `|x_i|`.
pub fn rearrange_desc(x: &[f64]) -> Result<Vec<f64>> {
    check_vector(x)?;
    let mut out = Vec::with_capacity(x.len());
    fill_desc(x, &mut out);
    Ok(out)
}

/// Non-decreasing rearrangement of the coordinates, signs kept.
pub fn sort_asc(x: &[f64]) -> Result<Vec<f64>> {
    check_vector(x)?;
    let mut out = x.to_vec();
    out.sort_unstable_by(|a, b| a.total_cmp(b));
    Ok(out)
}

/// `(sum_i w_i x_[i]^p)^{1/p}`.
pub fn lorentz_norm(params: &LorentzParams, x: &[f64]) -> Result<f64> {
    check_dim(params, x)?;
    let sorted = rearrange_desc(x)?;
    Ok(norm_of_sorted(params.weights(), &sorted, params.p))
}

/// `sum_i w_i x_[i]^p`, the `p`-th power of the norm.
pub fn psi(params: &LorentzParams, x: &[f64]) -> Result<f64> {
    check_dim(params, x)?;
    let sorted = rearrange_desc(x)?;
    Ok(psi_sorted(params.weights(), &sorted, params.p))
}

pub(crate) fn psi_sorted(w: &[f64], sorted: &[f64], p: f64) -> f64 {
    w.iter().zip(sorted).map(|(wi, xi)| wi * pow_abs(*xi, p)).sum()
}

/// Euclidean norm of the gradient of `psi`, with a flag for points where
/// `psi` is not differentiable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientNorm {
    pub value: f64,
    /// False when `|x_i|` has ties or zeros; the formula is still evaluated.
    pub smooth: bool,
}

/// `p (sum_i w_i^2 x_[i]^{2(p-1)})^{1/2}`.
pub fn psi_gradient_norm(params: &LorentzParams, x: &[f64]) -> Result<GradientNorm> {
    check_dim(params, x)?;
    let sorted = rearrange_desc(x)?;
    let q = 2.0 * (params.p - 1.0);
    let s: f64 = params
        .weights()
        .iter()
        .zip(&sorted)
        .map(|(w, xi)| w * w * pow_abs(*xi, q))
        .sum();
    let smooth = sorted.last().is_some_and(|&v| v > 0.0) && sorted.windows(2).all(|w| w[0] > w[1]);
    Ok(GradientNorm { value: params.p * s.sqrt(), smooth })
}

/// Supremum of the norm over the Euclidean unit sphere.
///
/// `(sum_i w_i^{2/(2-p)})^{(2-p)/(2p)}` for `1 <= p < 2` and `1` for `p >= 2`.
pub fn lipschitz_constant(params: &LorentzParams) -> Result<f64> {
    let p = params.p;
    if p < 1.0 {
        return Err(Error::Unsupported(format!(
            "no closed-form Lipschitz constant for the quasi-norm case p = {p} < 1"
        )));
    }
    if p >= 2.0 {
        return Ok(1.0);
    }
    let s = dual_weight_sum(params.weights(), p);
    Ok(s.powf((2.0 - p) / (2.0 * p)))
}

fn dual_weight_sum(w: &[f64], p: f64) -> f64 {
    let e = 2.0 / (2.0 - p);
    w.iter().map(|wi| wi.powf(e)).sum()
}

/// A unit vector attaining [`lipschitz_constant`].
///
/// For `1 <= p < 2` this is `theta_i = w_i^{1/(2-p)} / (sum_j w_j^{2/(2-p)})^{1/2}`;
/// for `p >= 2` it is `e_1`.
pub fn lipschitz_maximizer(params: &LorentzParams) -> Result<Vec<f64>> {
    let p = params.p;
    if p < 1.0 {
        return Err(Error::Unsupported(format!("maximizer undefined for p = {p} < 1")));
    }
    let n = params.n();
    if p >= 2.0 {
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        return Ok(e1);
    }
    let norm = dual_weight_sum(params.weights(), p).sqrt();
    Ok(params.weights().iter().map(|w| w.powf(1.0 / (2.0 - p)) / norm).collect())
}
