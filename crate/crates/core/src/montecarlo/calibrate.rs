//! Empirical fitting of the universal constants, always with a separate
//! validation stream.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::stats::RateEstimate;
use super::{
    estimate_median_norm, k_at_success_rate, map_gaussian_samples, trial_k_stars, verify_embedding, EmbeddingReport,
    MEDIAN_CHILD,
};
use crate::analytic::quadrature::adaptive_simpson;
use crate::analytic::{
    incomplete_gamma_bounds, power_integral_bounds, power_integral_exact, power_log_sum_bounds, power_log_sum_exact,
    GammaSign,
};
use crate::embedding::DistortionOptions;
use crate::error::{invalid, Error, Result};
use crate::ledger::ConstantLedger;
use crate::norms::{lipschitz_constant, LorentzParams};
use crate::stream::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationTarget {
    TwoSidedRatio,
    TailRate,
    SuccessRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub bound_name: String,
    pub target: CalibrationTarget,
    pub fitted_constant: f64,
    /// Two-sided fits: the `[c, C]` band of ratios on the fit grid.
    pub fitted_interval: Option<[f64; 2]>,
    pub fit_grid: Vec<serde_json::Value>,
    pub fit_rate: f64,
    pub validation_violation_rate: f64,
    pub fit_rates: Vec<f64>,
    pub validation_rates: Vec<f64>,
    pub fit_seed: RandomStream,
    pub validation_seed: RandomStream,
    pub diagnostics: Vec<String>,
}

fn check_streams(fit: RandomStream, val: RandomStream) -> Result<()> {
    if fit == val {
        return Err(invalid("fit and validation streams must differ"));
    }
    Ok(())
}

/// The analytic lemmas with a two-sided shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticLemma {
    IncompleteGammaDecay,
    IncompleteGammaGrowth,
    PowerLogSum,
    PowerIntegral,
}

/// A grid point; `x` is the swept variable (`b`, `n` or `T`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaPoint {
    pub x: f64,
    pub q: f64,
    pub a: f64,
}

fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|j| (lo.ln() + (hi.ln() - lo.ln()) * j as f64 / (count - 1) as f64).exp())
        .collect()
}

impl AnalyticLemma {
    pub fn name(self) -> &'static str {
        match self {
            AnalyticLemma::IncompleteGammaDecay => "incomplete_gamma_decay",
            AnalyticLemma::IncompleteGammaGrowth => "incomplete_gamma_growth",
            AnalyticLemma::PowerLogSum => "power_log_sum",
            AnalyticLemma::PowerIntegral => "power_integral",
        }
    }

    /// 200 points spanning two decades of the swept variable.
    pub fn default_grid(self) -> Vec<LemmaPoint> {
        let mut pts = Vec::new();
        match self {
            AnalyticLemma::IncompleteGammaDecay | AnalyticLemma::IncompleteGammaGrowth => {
                for q in [0.0, 0.5, 1.0, 2.0] {
                    for b in log_space(0.1, 10.0, 50) {
                        pts.push(LemmaPoint { x: b, q, a: 0.0 });
                    }
                }
            }
            AnalyticLemma::PowerLogSum => {
                for a in [0.0, 0.5, 1.0, 1.5, 3.0] {
                    for q in [0.0, 1.0] {
                        for n in log_space(100.0, 10_000.0, 20) {
                            pts.push(LemmaPoint { x: n.round(), q, a });
                        }
                    }
                }
            }
            AnalyticLemma::PowerIntegral => {
                for a in [-1.0, 0.0, 0.5, 1.0, 2.0] {
                    for t in log_space(10.0, 1000.0, 40) {
                        pts.push(LemmaPoint { x: t, q: 0.0, a });
                    }
                }
            }
        }
        pts
    }

    /// `oracle / shape`, normalized so the band does not depend on `q`:
    /// ratios whose constant enters as `K^{1+q}` are raised to `1/(1+q)`,
    /// and for `a > 1` the exact `(ln n)^q` term is removed first.
    pub fn normalized_ratio(self, pt: LemmaPoint) -> Result<f64> {
        let unit = ConstantLedger::unit();
        match self {
            AnalyticLemma::IncompleteGammaDecay => {
                let shape = incomplete_gamma_bounds(pt.x, pt.q, GammaSign::Decay, &unit)?.shape_value;
                let exact = adaptive_simpson(|w| (-w).exp() * pow0(w, pt.q), 0.0, pt.x, 0.0, 1e-11);
                Ok((exact / shape).powf(1.0 / (1.0 + pt.q)))
            }
            AnalyticLemma::IncompleteGammaGrowth => {
                // both sides carry e^b; divide it out before integrating
                let b = pt.x;
                let scaled = adaptive_simpson(|w| (w - b).exp() * pow0(w, pt.q), 0.0, b, 0.0, 1e-11);
                Ok(scaled * (1.0 + pt.q + b) / b.powf(1.0 + pt.q))
            }
            AnalyticLemma::PowerLogSum => {
                let n = pt.x as usize;
                let bound = power_log_sum_bounds(pt.a, pt.q, n, &unit)?;
                let exact = power_log_sum_exact(pt.a, pt.q, n);
                if pt.a <= 1.0 {
                    Ok((exact / bound.shape_value).powf(1.0 / (1.0 + pt.q)))
                } else {
                    let tail = pow0((n as f64).ln(), pt.q);
                    Ok((exact - tail) / (bound.shape_value - tail))
                }
            }
            AnalyticLemma::PowerIntegral => {
                let shape = power_integral_bounds(pt.a, pt.x, &unit)?.shape_value;
                Ok(power_integral_exact(pt.a, pt.x) / shape)
            }
        }
    }
}

fn pow0(x: f64, q: f64) -> f64 {
    if q == 0.0 {
        1.0
    } else {
        x.powf(q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecadeBand {
    pub decade: usize,
    pub points: usize,
    pub min: f64,
    pub max: f64,
}

/// Ratio band per decade of the swept variable, and how much its edges move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub lemma: AnalyticLemma,
    pub points: usize,
    pub interval: [f64; 2],
    pub bands: Vec<DecadeBand>,
    /// Largest over smallest per-decade minimum.
    pub lower_drift: f64,
    /// Largest over smallest per-decade maximum.
    pub upper_drift: f64,
}

impl DriftReport {
    pub fn drift(&self) -> f64 {
        self.lower_drift.max(self.upper_drift)
    }
}

pub fn ratio_drift(lemma: AnalyticLemma, grid: &[LemmaPoint]) -> Result<DriftReport> {
    if grid.is_empty() {
        return Err(Error::Empty("grid"));
    }
    let ratios: Vec<f64> = grid.iter().map(|&p| lemma.normalized_ratio(p)).collect::<Result<_>>()?;
    if let Some(i) = ratios.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Unsatisfiable(format!("{}: ratio {} at {:?}", lemma.name(), ratios[i], grid[i])));
    }
    let x0 = grid.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let x1 = grid.iter().map(|p| p.x).fold(0.0, f64::max);
    let decades = ((x1 / x0).log10().floor() as usize).max(1);
    let mut bands: Vec<DecadeBand> =
        (0..decades).map(|d| DecadeBand { decade: d, points: 0, min: f64::INFINITY, max: 0.0 }).collect();
    for (pt, &r) in grid.iter().zip(&ratios) {
        let d = ((pt.x / x0).log10().floor() as usize).min(decades - 1);
        let band = &mut bands[d];
        band.points += 1;
        band.min = band.min.min(r);
        band.max = band.max.max(r);
    }
    bands.retain(|b| b.points > 0);
    let spread = |v: Vec<f64>| {
        let hi = v.iter().cloned().fold(0.0, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    };
    Ok(DriftReport {
        lemma,
        points: grid.len(),
        interval: [
            ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratios.iter().cloned().fold(0.0, f64::max),
        ],
        lower_drift: spread(bands.iter().map(|b| b.min).collect()),
        upper_drift: spread(bands.iter().map(|b| b.max).collect()),
        bands,
    })
}

/// Fits the band `[c, C]` of normalized ratios on `fit_grid`; the
/// validation rate is the fraction of `validation_grid` points outside it.
/// Deterministic, so the streams are only recorded.
pub fn calibrate_two_sided(
    lemma: AnalyticLemma,
    fit_grid: &[LemmaPoint],
    validation_grid: &[LemmaPoint],
    fit_stream: RandomStream,
    validation_stream: RandomStream,
) -> Result<CalibrationRecord> {
    check_streams(fit_stream, validation_stream)?;
    let drift = ratio_drift(lemma, fit_grid)?;
    let [lo, hi] = drift.interval;
    let outside = validation_grid
        .iter()
        .map(|&p| lemma.normalized_ratio(p))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .filter(|r| *r < lo || *r > hi)
        .count();
    let val_rate = if validation_grid.is_empty() { 0.0 } else { outside as f64 / validation_grid.len() as f64 };
    Ok(CalibrationRecord {
        bound_name: lemma.name().into(),
        target: CalibrationTarget::TwoSidedRatio,
        fitted_constant: hi,
        fitted_interval: Some([lo, hi]),
        fit_grid: fit_grid.iter().map(|p| json!(p)).collect(),
        fit_rate: 0.0,
        validation_violation_rate: val_rate,
        fit_rates: vec![],
        validation_rates: vec![],
        fit_seed: fit_stream,
        validation_seed: validation_stream,
        diagnostics: vec![format!("per-decade drift {:.4} (lower) / {:.4} (upper)", drift.lower_drift, drift.upper_drift)],
    })
}

/// Fits the smallest `C` with `P{| |X|_{w,p} - M | > C t b} <= 2 e^{-t^2}`
/// empirically at every `t` on the fit stream, then measures the rates
/// with that `C` on the validation stream.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_tail(
    params: &LorentzParams,
    t_grid: &[f64],
    fit_trials: u64,
    validation_trials: u64,
    median_samples: u64,
    fit_stream: RandomStream,
    validation_stream: RandomStream,
) -> Result<CalibrationRecord> {
    check_streams(fit_stream, validation_stream)?;
    if t_grid.is_empty() {
        return Err(Error::Empty("t grid"));
    }
    if fit_trials < 1000 || validation_trials < 1000 {
        return Err(invalid("tail calibration needs at least 1000 trials per stream"));
    }
    let b = lipschitz_constant(params)?;
    let devs = |stream: RandomStream, trials: u64| -> Result<Vec<f64>> {
        let m = estimate_median_norm(params, median_samples, stream.child(MEDIAN_CHILD))?.point;
        Ok(map_gaussian_samples(params.n(), trials, stream, |x, s| (params.norm_unchecked(x, s) - m).abs() / b))
    };
    let mut fit = devs(fit_stream, fit_trials)?;
    fit.sort_by(|a, b| b.total_cmp(a));
    let mut c = 0.0f64;
    for &t in t_grid {
        let allowed = (2.0 * (-t * t).exp() * fit_trials as f64).floor() as usize;
        if allowed >= fit.len() {
            continue;
        }
        c = c.max(fit[allowed] / t);
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Unsatisfiable(format!("no positive constant fits the tail on {t_grid:?}")));
    }
    let rates = |v: &[f64], trials: u64| -> Vec<f64> {
        t_grid
            .iter()
            .map(|&t| v.iter().filter(|&&d| d > c * t).count() as f64 / trials as f64)
            .collect()
    };
    let fit_rates = rates(&fit, fit_trials);
    let val = devs(validation_stream, validation_trials)?;
    let validation_rates = rates(&val, validation_trials);
    Ok(CalibrationRecord {
        bound_name: "gaussian_concentration".into(),
        target: CalibrationTarget::TailRate,
        fitted_constant: c,
        fitted_interval: None,
        fit_grid: t_grid.iter().map(|t| json!({ "t": t, "n": params.n(), "p": params.p() })).collect(),
        fit_rate: fit_rates[0],
        validation_violation_rate: validation_rates[0],
        fit_rates,
        validation_rates,
        fit_seed: fit_stream,
        validation_seed: validation_stream,
        diagnostics: vec![format!("Lipschitz constant {b}")],
    })
}

/// Settings for [`calibrate_dimension`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionCalibration {
    pub eps: f64,
    /// `d'` with constants set to one; the fitted constant multiplies it.
    pub d_shape: f64,
    pub fit_trials: u64,
    pub validation_trials: u64,
    pub directions: usize,
    /// Success rate demanded on the fit stream.
    pub fit_target: f64,
    pub median_samples: u64,
}

/// Fits `c` so that `k = floor(c d_shape)` embeds with success rate at
/// least `fit_target` on the fit stream, then runs [`verify_embedding`] at
/// that `k` on the validation stream (with its own median estimate).
pub fn calibrate_dimension(
    params: &LorentzParams,
    cfg: &DimensionCalibration,
    fit_stream: RandomStream,
    validation_stream: RandomStream,
    opts: &DistortionOptions,
) -> Result<(CalibrationRecord, EmbeddingReport)> {
    check_streams(fit_stream, validation_stream)?;
    if !(cfg.d_shape.is_finite() && cfg.d_shape > 0.0) {
        return Err(invalid(format!("d_shape must be positive, got {}", cfg.d_shape)));
    }
    let n = params.n();
    let k_cap = ((4.0 * cfg.d_shape).ceil() as usize).clamp(4, n);
    let m_fit = estimate_median_norm(params, cfg.median_samples, fit_stream.child(MEDIAN_CHILD))?.point;
    let kstars: Vec<usize> = (0..cfg.fit_trials)
        .into_par_iter()
        .map(|j| trial_k_stars(params, m_fit, &[cfg.eps], k_cap, cfg.directions, fit_stream.child(j), opts).map(|v| v[0]))
        .collect::<Result<_>>()?;
    let k_fit = k_at_success_rate(&kstars, cfg.fit_target);
    if k_fit == 0 {
        return Err(Error::Unsatisfiable(format!(
            "even k = 1 misses the {} success target at eps = {}",
            cfg.fit_target, cfg.eps
        )));
    }
    let c = (k_fit as f64 + 0.5) / cfg.d_shape;
    let fit_ok = kstars.iter().filter(|&&k| k >= k_fit).count() as u64;
    let k_val = ((c * cfg.d_shape).floor() as usize).max(1);
    let m_val = estimate_median_norm(params, cfg.median_samples, validation_stream.child(MEDIAN_CHILD))?.point;
    let report = verify_embedding(params, k_val, cfg.eps, cfg.validation_trials, cfg.directions, m_val, validation_stream, opts)?;
    let mut diagnostics = vec![format!("k fitted = {k_fit}, k validated = {k_val}, M fit = {m_fit}, M validation = {m_val}")];
    if kstars.contains(&k_cap) {
        diagnostics.push(format!("some fit trials reached the search cap k = {k_cap}"));
    }
    let fit_rate = 1.0 - RateEstimate::new(fit_ok, cfg.fit_trials).rate;
    let record = CalibrationRecord {
        bound_name: "c_rp".into(),
        target: CalibrationTarget::SuccessRate,
        fitted_constant: c,
        fitted_interval: None,
        fit_grid: vec![json!({
            "n": n, "p": params.p(), "r": params.power_r(), "eps": cfg.eps,
            "d_shape": cfg.d_shape, "trials": cfg.fit_trials, "directions": cfg.directions,
            "fit_target": cfg.fit_target,
        })],
        fit_rate,
        validation_violation_rate: 1.0 - report.success.rate,
        fit_rates: vec![fit_rate],
        validation_rates: vec![1.0 - report.success.rate],
        fit_seed: fit_stream,
        validation_seed: validation_stream,
        diagnostics,
    };
    Ok((record, report))
}
