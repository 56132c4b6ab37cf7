//! Named stand-ins for the unspecified universal constants.
//!
//! Every bound in the library is evaluated twice: once in *shape form*
//! (all constants equal to one) and once in *ledger form* (constants looked
//! up here). Calibration in [`crate::montecarlo`] produces fitted ledgers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Upper constant for Gaussian concentration.
pub const C_GAUSS: &str = "C_gauss";
/// Exponent constant for Gaussian concentration.
pub const C_GAUSS_LOWER: &str = "c_gauss";
/// Order-statistic envelope constant.
pub const C_ORDER: &str = "C_order";
/// Lower order-statistic envelope constant.
pub const C_ORDER_LOWER: &str = "c_order";
/// Constant in the sorted-difference sup bound.
pub const C_TX: &str = "C_tx";
/// Constant inside the exponent of the Renyi order-statistic bound.
pub const C_RENYI: &str = "c_renyi";
pub const C_MEDIAN_UPPER: &str = "C_median_upper";
pub const C_MEDIAN_LOWER: &str = "c_median_lower";
/// Upper constant of the two-sided analytic estimates.
pub const C_BOUND: &str = "C_bound";
/// Lower constant of the two-sided analytic estimates.
pub const C_BOUND_LOWER: &str = "c_bound";
/// Universal constant in the embedding-dimension displays.
pub const C_DIM: &str = "c_dim";
/// Parameter-dependent constant of the simplified asymptotic tables.
pub const C_RP: &str = "c_rp";
/// Outer constant for the l_p corollary when p > 2.
pub const C2_LP: &str = "c2_lp";
pub const C2_ELLINFTY: &str = "c2_ellinfty";
pub const C1_ELLINFTY: &str = "C1_ellinfty";
/// Gate constant of the l_infinity applicability test.
pub const C_ELLINFTY_GATE: &str = "c_ellinfty_gate";
/// Constant in the auxiliary-norm deviation levels S, R, A, B.
pub const C_SHARP: &str = "C_sharp";
/// Lower/upper constants bracketing the inverse normal CDF near one.
pub const C_INVERSE_LOWER: &str = "c_inverse";
pub const C_INVERSE_UPPER: &str = "C_inverse";
/// Gating constant for the uniform-over-sphere deviation bound (k <= c t^2).
pub const C_SCHECHTMAN: &str = "c_schechtman";

/// Every constant the library knows about.
pub const KNOWN_CONSTANTS: &[&str] = &[
    C_GAUSS,
    C_GAUSS_LOWER,
    C_ORDER,
    C_ORDER_LOWER,
    C_TX,
    C_RENYI,
    C_MEDIAN_UPPER,
    C_MEDIAN_LOWER,
    C_BOUND,
    C_BOUND_LOWER,
    C_DIM,
    C_RP,
    C2_LP,
    C2_ELLINFTY,
    C1_ELLINFTY,
    C_ELLINFTY_GATE,
    C_SHARP,
    C_INVERSE_LOWER,
    C_INVERSE_UPPER,
    C_SCHECHTMAN,
];

/// A map from constant names to strictly positive, finite reals.
///
/// The default ledger has every known constant equal to one. Lookups of a
/// name that is absent return one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct ConstantLedger {
    values: BTreeMap<String, f64>,
}

impl Default for ConstantLedger {
    fn default() -> Self {
        Self {
            values: KNOWN_CONSTANTS.iter().map(|k| (k.to_string(), 1.0)).collect(),
        }
    }
}

impl ConstantLedger {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> f64 {
        self.values.get(name).copied().unwrap_or(1.0)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(invalid(format!(
                "ledger constant {name} must be positive and finite, got {value}"
            )));
        }
        self.values.insert(name.to_string(), value);
        Ok(())
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<Self> {
        self.set(name, value)?;
        Ok(self)
    }

    /// True when every entry equals one.
    pub fn is_unit(&self) -> bool {
        self.values.values().all(|&v| v == 1.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl TryFrom<BTreeMap<String, f64>> for ConstantLedger {
    type Error = crate::Error;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self> {
        let mut ledger = ConstantLedger::default();
        for (k, v) in map {
            ledger.set(&k, v)?;
        }
        Ok(ledger)
    }
}

impl From<ConstantLedger> for BTreeMap<String, f64> {
    fn from(l: ConstantLedger) -> Self {
        l.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_all_ones() {
        let l = ConstantLedger::default();
        assert!(l.is_unit());
        for name in KNOWN_CONSTANTS {
            assert_eq!(l.get(name), 1.0);
        }
        assert_eq!(l.get("not_a_constant"), 1.0);
    }

    #[test]
    fn rejects_non_positive() {
        let mut l = ConstantLedger::default();
        assert!(l.set(C_DIM, 0.0).is_err());
        assert!(l.set(C_DIM, -1.0).is_err());
        assert!(l.set(C_DIM, f64::INFINITY).is_err());
        assert!(l.set(C_DIM, f64::NAN).is_err());
        l.set(C_DIM, 0.25).unwrap();
        assert_eq!(l.get(C_DIM), 0.25);
    }

    #[test]
    fn json_round_trip_validates() {
        let l = ConstantLedger::default().with(C_SHARP, 2.5).unwrap();
        let s = serde_json::to_string(&l).unwrap();
        let back: ConstantLedger = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
        assert!(serde_json::from_str::<ConstantLedger>(r#"{"c_dim": -2.0}"#).is_err());
        // partial files are filled with the defaults
        let partial: ConstantLedger = serde_json::from_str(r#"{"c_dim": 0.5}"#).unwrap();
        assert_eq!(partial.get(C_DIM), 0.5);
        assert_eq!(partial.get(C_SHARP), 1.0);
    }
}
