//! Standard normal quantile function (Wichura's AS241, PPND16).

use crate::error::{invalid, Result};

const A: [f64; 8] = [
    3.387_132_872_796_366_5,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_3e3,
    1.373_169_376_550_946e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_546,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_8e-15,
];

fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// `Phi^{-1}(u)` for `u` in `(0, 1)`; relative accuracy about `1e-16`.
pub fn inverse_normal_cdf(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(invalid(format!("quantile argument must lie in (0, 1), got {u}")));
    }
    let q = u - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * poly(&A, r) / poly(&B, r));
    }
    let r = if q < 0.0 { u } else { 1.0 - u };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    Ok(if q < 0.0 { -x } else { x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::quadrature::adaptive_simpson;

    fn phi_by_quadrature(x: f64) -> f64 {
        let dens = |s: f64| (-0.5 * s * s).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if x >= 0.0 {
            0.5 + adaptive_simpson(dens, 0.0, x, 1e-14, 1e-13)
        } else {
            0.5 - adaptive_simpson(dens, x, 0.0, 1e-14, 1e-13)
        }
    }

    #[test]
    fn known_values() {
        assert_eq!(inverse_normal_cdf(0.5).unwrap(), 0.0);
        assert!((inverse_normal_cdf(0.75).unwrap() - 0.674_489_750_196_081_7).abs() < 1e-12);
        assert!((inverse_normal_cdf(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!(inverse_normal_cdf(0.0).is_err());
        assert!(inverse_normal_cdf(1.0).is_err());
        assert!(inverse_normal_cdf(f64::NAN).is_err());
    }

    #[test]
    fn round_trip_against_quadrature() {
        for j in 1..200 {
            let u = j as f64 / 200.0;
            let x = inverse_normal_cdf(u).unwrap();
            assert!((phi_by_quadrature(x) - u).abs() < 1e-10, "u = {u}");
        }
        // 0.75 against the quadrature oracle
        let x = inverse_normal_cdf(0.75).unwrap();
        assert!((phi_by_quadrature(x) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn strictly_increasing_and_symmetric() {
        let mut prev = f64::NEG_INFINITY;
        for j in 1..10_000 {
            let u = j as f64 / 10_000.0;
            let x = inverse_normal_cdf(u).unwrap();
            assert!(x > prev);
            prev = x;
            assert!((x + inverse_normal_cdf(1.0 - u).unwrap()).abs() < 1e-9);
        }
        assert!(inverse_normal_cdf(1e-300).unwrap() < -37.0);
    }

    #[test]
    fn bracketed_by_log_shape() {
        // c sqrt(ln 1/(1-x)) <= Phi^{-1}((1+x)/2) <= C sqrt(ln 1/(1-x)) on (1/3, 1)
        let ratios: Vec<f64> = (1..1000)
            .map(|j| {
                let x = 1.0 / 3.0 + (2.0 / 3.0) * (1.0 - (-(j as f64) / 60.0).exp());
                let x = x.min(1.0 - 1e-15);
                inverse_normal_cdf(0.5 * (1.0 + x)).unwrap() / (1.0 / (1.0 - x)).ln().sqrt()
            })
            .collect();
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.4 && hi < 1.5, "[{lo}, {hi}]");
    }
}
