//! Two-sided closed-form estimates for incomplete gamma integrals, power
//! sums and integrals, order statistics of uniform and normal samples, and
//! medians of Lorentz norms of Gaussian vectors.

pub mod normal;
pub mod quadrature;

use serde::{Deserialize, Serialize};

pub use normal::inverse_normal_cdf;

use crate::error::{invalid, Error, Result};
use crate::ledger::{self, ConstantLedger};

/// A `c * expr <= quantity <= C * expr` statement, evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedBound {
    pub lower: f64,
    pub upper: f64,
    /// The expression with every constant set to one.
    pub shape_value: f64,
    pub constants_used: Vec<String>,
}

impl TwoSidedBound {
    fn new(lower: f64, upper: f64, shape_value: f64, used: &[&str]) -> Result<Self> {
        if lower > upper {
            return Err(invalid(format!(
                "ledger gives lower bound {lower} above upper bound {upper}; check {used:?}"
            )));
        }
        Ok(Self { lower, upper, shape_value, constants_used: used.iter().map(|s| s.to_string()).collect() })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and >= 0, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSign {
    /// `int_0^b e^{-w} w^q dw`
    Decay,
    /// `int_0^b e^{w} w^q dw`
    Growth,
}

/// Bounds on `int_0^b e^{-+w} w^q dw`.
///
/// Decay: `min{1+q, b}^{1+q}` scaled by `c^{1+q}` / `C^{1+q}`.
/// Growth: `e^b b^{1+q} / (1+q+b)` scaled by `c` / `C`.
pub fn incomplete_gamma_bounds(b: f64, q: f64, sign: GammaSign, ledger: &ConstantLedger) -> Result<TwoSidedBound> {
    check_nonneg("b", b)?;
    check_nonneg("q", q)?;
    let (c_lo, c_hi) = (ledger.get(ledger::C_BOUND_LOWER), ledger.get(ledger::C_BOUND));
    let used = [ledger::C_BOUND_LOWER, ledger::C_BOUND];
    match sign {
        GammaSign::Decay => {
            let shape = (1.0 + q).min(b).powf(1.0 + q);
            TwoSidedBound::new(c_lo.powf(1.0 + q) * shape, c_hi.powf(1.0 + q) * shape, shape, &used)
        }
        GammaSign::Growth => {
            let shape = if b == 0.0 { 0.0 } else { (b + (1.0 + q) * b.ln() - (1.0 + q + b).ln()).exp() };
            TwoSidedBound::new(c_lo * shape, c_hi * shape, shape, &used)
        }
    }
}

/// `x^q` with `0^0 = 1`.
fn pow0(x: f64, q: f64) -> f64 {
    if q == 0.0 {
        1.0
    } else {
        x.powf(q)
    }
}

/// Bounds on `sum_{i=1}^n i^{-a} (ln(n/i))^q`.
///
/// For `a` in `[0, 1]`: `K^{1+q} n^{1-a} (1+q)^{1+q} (ln n)^{1+q} / ((1-a) ln n + 1 + q)^{1+q}`.
/// For `a > 1`: `K (ln n)^{1+q} / ((a-1) ln n + 1 + q) + (ln n)^q`.
pub fn power_log_sum_bounds(a: f64, q: f64, n: usize, ledger: &ConstantLedger) -> Result<TwoSidedBound> {
    check_nonneg("a", a)?;
    check_nonneg("q", q)?;
    if n < 2 {
        return Err(invalid(format!("power-log sums need n >= 2, got {n}")));
    }
    let (c_lo, c_hi) = (ledger.get(ledger::C_BOUND_LOWER), ledger.get(ledger::C_BOUND));
    let used = [ledger::C_BOUND_LOWER, ledger::C_BOUND];
    let ln_n = (n as f64).ln();
    if a <= 1.0 {
        let log_shape = (1.0 - a) * ln_n + (1.0 + q) * ((1.0 + q).ln() + ln_n.ln() - ((1.0 - a) * ln_n + 1.0 + q).ln());
        let shape = log_shape.exp();
        TwoSidedBound::new(c_lo.powf(1.0 + q) * shape, c_hi.powf(1.0 + q) * shape, shape, &used)
    } else {
        let main = ln_n.powf(1.0 + q) / ((a - 1.0) * ln_n + 1.0 + q);
        let tail = pow0(ln_n, q);
        TwoSidedBound::new(c_lo * main + tail, c_hi * main + tail, main + tail, &used)
    }
}

/// Direct summation of `sum_{i=1}^n i^{-a} (ln(n/i))^q` (with `0^0 = 1`).
pub fn power_log_sum_exact(a: f64, q: f64, n: usize) -> f64 {
    let nf = n as f64;
    (1..=n).map(|i| (i as f64).powf(-a) * pow0((nf / i as f64).ln(), q)).sum()
}

/// Bounds on `int_1^T x^{-a} dx` with shape `(1 + T^{1-a}) ln T / (1 + |1-a| ln T)`.
pub fn power_integral_bounds(a: f64, t_upper: f64, ledger: &ConstantLedger) -> Result<TwoSidedBound> {
    if !a.is_finite() {
        return Err(invalid(format!("a must be finite, got {a}")));
    }
    if !(t_upper.is_finite() && t_upper >= 1.0) {
        return Err(invalid(format!("T must be finite and >= 1, got {t_upper}")));
    }
    let ln_t = t_upper.ln();
    let shape = (1.0 + ((1.0 - a) * ln_t).exp()) * ln_t / (1.0 + (1.0 - a).abs() * ln_t);
    let (c_lo, c_hi) = (ledger.get(ledger::C_BOUND_LOWER), ledger.get(ledger::C_BOUND));
    TwoSidedBound::new(c_lo * shape, c_hi * shape, shape, &[ledger::C_BOUND_LOWER, ledger::C_BOUND])
}

/// Closed form of `int_1^T x^{-a} dx`.
pub fn power_integral_exact(a: f64, t_upper: f64) -> f64 {
    let ln_t = t_upper.ln();
    if a == 1.0 {
        ln_t
    } else {
        ((1.0 - a) * ln_t).exp_m1() / (1.0 - a)
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// `xi_1(t) = e^t (1 - t)`, a decreasing bijection of `[0, 1]`.
pub fn xi1(t: f64) -> Result<f64> {
    check_unit("t", t)?;
    Ok(t.exp() * (1.0 - t))
}

/// `min{sqrt(2(1-s)), 1 - s/e}`, an upper bound for `xi_1^{-1}(s)`.
pub fn xi1_inv_upper(s: f64) -> Result<f64> {
    check_unit("s", s)?;
    Ok((2.0 * (1.0 - s)).sqrt().min(1.0 - s / std::f64::consts::E))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderStatVariant {
    /// The bound built from `xi_1`; sharp for `i > n/2`.
    Bottom,
    /// The exponential-representation bound; sharp for `i <= n/2`.
    Renyi,
}

/// Upper bound for the `i`-th smallest of `n` uniforms at deviation level `t`.
///
/// Bottom: `1 - (n-i+1)/(n+1) (1 - xi_1^{-1}(exp((-t^2 - 4 ln(n-i+1)) / (2(n-i+1)))))`,
/// with the inverse replaced by [`xi1_inv_upper`].
/// Renyi: `1 - (n-i)/n exp(-c max{(t + sqrt(ln i)) sqrt(i) / sqrt(n(n-i+1)), (t^2 + ln i)/(n-i+1)})`.
pub fn uniform_orderstat_upper(
    n: usize,
    i: usize,
    t: f64,
    variant: OrderStatVariant,
    ledger: &ConstantLedger,
) -> Result<f64> {
    if i == 0 || i > n {
        return Err(invalid(format!("order index i = {i} outside 1..={n}")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid(format!("t must be finite and > 0, got {t}")));
    }
    let (nf, fi) = (n as f64, i as f64);
    let m = (n - i + 1) as f64;
    match variant {
        OrderStatVariant::Bottom => {
            let arg = ((-t * t - 4.0 * m.ln()) / (2.0 * m)).exp();
            Ok(1.0 - m / (nf + 1.0) * (1.0 - xi1_inv_upper(arg)?))
        }
        OrderStatVariant::Renyi => {
            let c = ledger.get(ledger::C_RENYI);
            let ln_i = fi.ln();
            let first = (t + ln_i.sqrt()) * fi.sqrt() / (nf * m).sqrt();
            let second = (t * t + ln_i) / m;
            Ok(1.0 - (nf - fi) / nf * (-c * first.max(second)).exp())
        }
    }
}

/// `C (ln(n/i) + t^2/i)^{1/2}`, the envelope for the `i`-th largest `|X_j|`.
pub fn normal_orderstat_envelope(n: usize, i: usize, t: f64, ledger: &ConstantLedger) -> Result<f64> {
    if n < 3 {
        return Err(invalid(format!("normal order statistics need n >= 3, got {n}")));
    }
    if i == 0 || 2 * i > n + 1 {
        return Err(invalid(format!("order index i = {i} outside 1..=(n+1)/2 for n = {n}")));
    }
    check_nonneg("t", t)?;
    let fi = i as f64;
    Ok(ledger.get(ledger::C_ORDER) * ((n as f64 / fi).ln() + t * t / fi).sqrt())
}

/// `C min{t^2 / sqrt(ln n), t}`, the sup-distance between sorted samples.
pub fn tx_deviation_bound(n: usize, t: f64, ledger: &ConstantLedger) -> Result<f64> {
    if n < 3 {
        return Err(invalid(format!("need n >= 3, got {n}")));
    }
    check_nonneg("t", t)?;
    Ok(ledger.get(ledger::C_TX) * (t * t / (n as f64).ln().sqrt()).min(t))
}

/// Bounds on the median of `sum_i i^{-r} X_[i]^p` for standard normal `X`.
///
/// `r <= 1`: `K^p p^{p/2} n^{1-r} (ln n)^{1+p/2} / (p + (1-r) ln n)^{1+p/2}`.
/// `r > 1`: `K^p (ln n)^{1+p/2} / (1 + (r-1) ln n) + K^p (ln n)^{p/2}`.
pub fn median_psi_bounds(r: f64, p: f64, n: usize, ledger: &ConstantLedger) -> Result<TwoSidedBound> {
    check_nonneg("r", r)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(invalid(format!("p must be finite and >= 1, got {p}")));
    }
    if n < 2 {
        return Err(invalid(format!("need n >= 2, got {n}")));
    }
    let ln_n = (n as f64).ln();
    let h = 1.0 + p / 2.0;
    let shape = if r <= 1.0 {
        ((p / 2.0) * p.ln() + (1.0 - r) * ln_n + h * ln_n.ln() - h * (p + (1.0 - r) * ln_n).ln()).exp()
    } else {
        ln_n.powf(h) / (1.0 + (r - 1.0) * ln_n) + ln_n.powf(p / 2.0)
    };
    let lo = ledger.get(ledger::C_MEDIAN_LOWER).powf(p);
    let hi = ledger.get(ledger::C_MEDIAN_UPPER).powf(p);
    TwoSidedBound::new(lo * shape, hi * shape, shape, &[ledger::C_MEDIAN_LOWER, ledger::C_MEDIAN_UPPER])
}

/// `(sum_i w_i (ln(n/i))^{p/2})^{1/p}`, the shape of the median of `|X|_{w,p}`.
pub fn median_norm_shape(weights: &[f64], p: f64) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::Empty("weights"));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(invalid(format!("p must be finite and > 0, got {p}")));
    }
    let nf = weights.len() as f64;
    let s: f64 = weights
        .iter()
        .enumerate()
        .map(|(j, w)| w * (nf / (j + 1) as f64).ln().powf(p / 2.0))
        .sum();
    Ok(s.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::quadrature::adaptive_simpson;
    use super::*;
    use proptest::prelude::*;

    fn unit() -> ConstantLedger {
        ConstantLedger::unit()
    }

    #[test]
    fn default_ledger_collapses_bounds() {
        let b = incomplete_gamma_bounds(2.0, 1.0, GammaSign::Decay, &unit()).unwrap();
        assert_eq!(b.lower, b.upper);
        assert_eq!(b.lower, b.shape_value);
        let b = power_log_sum_bounds(2.0, 1.0, 100, &unit()).unwrap();
        assert_eq!(b.lower, b.shape_value);
        let l = unit().with(ledger::C_BOUND_LOWER, 2.0).unwrap();
        assert!(power_integral_bounds(2.0, 10.0, &l).is_err());
    }

    #[test]
    fn incomplete_gamma_examples() {
        for q in [0.0, 0.5, 3.0] {
            for sign in [GammaSign::Decay, GammaSign::Growth] {
                assert_eq!(incomplete_gamma_bounds(0.0, q, sign, &unit()).unwrap().shape_value, 0.0);
            }
        }
        let b = incomplete_gamma_bounds(1.0, 0.0, GammaSign::Decay, &unit()).unwrap();
        assert_eq!(b.shape_value, 1.0);
        let oracle = adaptive_simpson(|w| (-w).exp(), 0.0, 1.0, 1e-12, 0.0);
        assert!((oracle - (1.0 - (-1f64).exp())).abs() < 1e-10);
        let ratio = oracle / b.shape_value;
        assert!((0.5..=1.0).contains(&ratio));
        let g = incomplete_gamma_bounds(2.0, 1.0, GammaSign::Growth, &unit()).unwrap();
        let e2 = 2f64.exp();
        assert!((g.shape_value - e2).abs() < 1e-12);
        // antiderivative e^w (w - 1)
        let exact = e2 * (2.0 - 1.0) + 1.0;
        let quad = adaptive_simpson(|w| w.exp() * w, 0.0, 2.0, 1e-12, 0.0);
        assert!((quad - exact).abs() < 1e-10);
        assert!((exact - 8.389_056).abs() < 1e-6);
        assert!(incomplete_gamma_bounds(-1.0, 0.0, GammaSign::Decay, &unit()).is_err());
        assert!(incomplete_gamma_bounds(1.0, -0.5, GammaSign::Growth, &unit()).is_err());
    }

    #[test]
    fn power_log_sum_examples() {
        // a = 0, q = 0: the sum is n; the shape is n ln n / (ln n + 1)
        for n in [10usize, 1000, 100_000] {
            assert_eq!(power_log_sum_exact(0.0, 0.0, n), n as f64);
            let b = power_log_sum_bounds(0.0, 0.0, n, &unit()).unwrap();
            let ln_n = (n as f64).ln();
            assert!((b.shape_value - n as f64 * ln_n / (ln_n + 1.0)).abs() < 1e-9 * n as f64);
        }
        // 0^0 = 1 at i = n
        assert_eq!(power_log_sum_exact(1.0, 0.0, 2), 1.5);
        // a = 2, q = 1: fitted constant stable across decades
        let fits: Vec<f64> = [1000usize, 10_000, 100_000]
            .iter()
            .map(|&n| {
                let ln_n = (n as f64).ln();
                let main = ln_n * ln_n / (ln_n + 2.0);
                (power_log_sum_exact(2.0, 1.0, n) - ln_n) / main
            })
            .collect();
        assert!(fits.iter().all(|&c| (0.1..=10.0).contains(&c)), "{fits:?}");
        let (lo, hi) = fits.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi / lo < 2.0);
    }

    #[test]
    fn power_integral_examples() {
        assert_eq!(power_integral_bounds(2.0, 1.0, &unit()).unwrap().shape_value, 0.0);
        assert_eq!(power_integral_exact(2.0, 1.0), 0.0);
        let b = power_integral_bounds(1.0, std::f64::consts::E, &unit()).unwrap();
        assert!((b.shape_value - 2.0).abs() < 1e-15);
        assert!((power_integral_exact(1.0, std::f64::consts::E) - 1.0).abs() < 1e-15);
        let b = power_integral_bounds(3.0, 1000.0, &unit()).unwrap();
        let ln_t = 1000f64.ln();
        let expect = (1.0 + 1e-6) * ln_t / (1.0 + 2.0 * ln_t);
        assert!((b.shape_value - expect).abs() < 1e-12);
        assert!((b.shape_value - 0.46625).abs() < 1e-4);
        assert!((power_integral_exact(3.0, 1000.0) - 0.4999995).abs() < 1e-9);
    }

    #[test]
    fn xi1_and_inverse() {
        assert_eq!(xi1(0.0).unwrap(), 1.0);
        assert_eq!(xi1(1.0).unwrap(), 0.0);
        assert_eq!(xi1_inv_upper(1.0).unwrap(), 0.0);
        assert!(xi1(1.1).is_err());
        assert!(xi1_inv_upper(-0.1).is_err());
        for j in 0..=100 {
            let s = j as f64 / 100.0;
            // bisection oracle for the true inverse
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if xi1(mid).unwrap() > s {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let up = xi1_inv_upper(s).unwrap();
            assert!(up >= lo - 1e-12);
            assert!(xi1(up).unwrap() <= s + 1e-12);
        }
    }

    #[test]
    fn orderstat_examples() {
        let v = uniform_orderstat_upper(100, 100, 2.0, OrderStatVariant::Renyi, &unit()).unwrap();
        assert_eq!(v, 1.0);
        for i in 1..=100 {
            for variant in [OrderStatVariant::Bottom, OrderStatVariant::Renyi] {
                let v = uniform_orderstat_upper(100, i, 1.5, variant, &unit()).unwrap();
                assert!(v > 0.0 && v <= 1.0);
            }
        }
        assert!(uniform_orderstat_upper(10, 0, 1.0, OrderStatVariant::Bottom, &unit()).is_err());
        assert!(uniform_orderstat_upper(10, 11, 1.0, OrderStatVariant::Bottom, &unit()).is_err());
        let env = normal_orderstat_envelope(1000, 1, 0.0, &unit()).unwrap();
        assert!((env - 1000f64.ln().sqrt()).abs() < 1e-15);
        assert!(normal_orderstat_envelope(1000, 501, 0.0, &unit()).is_err());
        assert!(normal_orderstat_envelope(2, 1, 0.0, &unit()).is_err());
        let n = 4096;
        let ln_n = (n as f64).ln();
        assert!((tx_deviation_bound(n, 1.0, &unit()).unwrap() - 1.0 / ln_n.sqrt()).abs() < 1e-15);
        assert_eq!(tx_deviation_bound(n, 10.0, &unit()).unwrap(), 10.0);
    }

    #[test]
    fn median_shapes() {
        let b = median_psi_bounds(0.0, 2.0, 10_000, &unit()).unwrap();
        let ln_n = 10_000f64.ln();
        let expect = 2.0 * 10_000.0 * ln_n * ln_n / ((2.0 + ln_n) * (2.0 + ln_n));
        assert!((b.shape_value - expect).abs() < 1e-9 * expect);
        let b = median_psi_bounds(1.5, 2.0, 1000, &unit()).unwrap();
        let l = 1000f64.ln();
        assert!((b.shape_value - (l * l / (1.0 + 0.5 * l) + l)).abs() < 1e-12);
        for n in [100usize, 1000, 10_000] {
            let s = median_norm_shape(&vec![1.0; n], 2.0).unwrap();
            let ratio = s / (n as f64).sqrt();
            assert!((0.9..=1.1).contains(&ratio), "n = {n}: {ratio}");
        }
    }

    proptest! {
        #[test]
        fn bounds_ordered_with_any_consistent_ledger(
            c_lo in 0.05f64..1.0,
            c_hi in 1.0f64..20.0,
            b in 0.0f64..50.0,
            q in 0.0f64..4.0,
            a in 0.0f64..3.0,
            n in 2usize..5000,
        ) {
            let l = ConstantLedger::unit()
                .with(ledger::C_BOUND_LOWER, c_lo).unwrap()
                .with(ledger::C_BOUND, c_hi).unwrap();
            for sign in [GammaSign::Decay, GammaSign::Growth] {
                let t = incomplete_gamma_bounds(b, q, sign, &l).unwrap();
                prop_assert!(t.lower <= t.upper);
            }
            let t = power_log_sum_bounds(a, q, n, &l).unwrap();
            prop_assert!(t.lower <= t.upper);
        }

        #[test]
        fn xi1_inverse_overshoots(s in 0.0f64..=1.0) {
            prop_assert!(xi1(xi1_inv_upper(s).unwrap()).unwrap() <= s + 1e-12);
        }
    }
}
