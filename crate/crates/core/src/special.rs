//! Gaussian density and survival function.
#![allow(clippy::excessive_precision)]
//!
//! The complementary error function uses W. J. Cody's rational Chebyshev
//! approximations (three intervals), which keep full relative precision in
//! the upper tail where `1 - erf(x)` would cancel catastrophically.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::SIGMA_MIN;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_95;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;

// |x| <= 0.46875
const A: [f64; 5] = [
    3.161_123_743_870_565_6,
    1.138_641_541_510_501_56e2,
    3.774_852_376_853_020_21e2,
    3.209_377_589_138_469_47e3,
    1.857_777_061_846_031_53e-1,
];
const B: [f64; 4] = [
    2.360_129_095_234_412_09e1,
    2.440_246_379_344_441_73e2,
    1.282_616_526_077_372_28e3,
    2.844_236_833_439_170_62e3,
];

// 0.46875 < |x| <= 4
const C: [f64; 9] = [
    5.641_884_969_886_700_89e-1,
    8.883_149_794_388_375_94,
    6.611_919_063_714_162_95e1,
    2.986_351_381_974_001_31e2,
    8.819_522_212_417_690_9e2,
    1.712_047_612_634_070_58e3,
    2.051_078_377_826_071_47e3,
    1.230_339_354_797_997_25e3,
    2.153_115_354_744_038_46e-8,
];
const D: [f64; 8] = [
    1.574_492_611_070_983_47e1,
    1.176_939_508_913_124_99e2,
    5.371_811_018_620_098_58e2,
    1.621_389_574_566_690_19e3,
    3.290_799_235_733_459_63e3,
    4.362_619_090_143_247_16e3,
    3.439_367_674_143_721_64e3,
    1.230_339_354_803_749_42e3,
];

// |x| > 4
const P: [f64; 6] = [
    3.053_266_349_612_323_44e-1,
    3.603_448_999_498_044_39e-1,
    1.257_817_261_112_292_46e-1,
    1.608_378_514_874_227_66e-2,
    6.587_491_615_298_378_03e-4,
    1.631_538_713_730_209_78e-2,
];
const Q: [f64; 5] = [
    2.568_520_192_289_822_42,
    1.872_952_849_923_460_47,
    5.279_051_029_514_284_12e-1,
    6.051_834_131_244_131_91e-2,
    2.335_204_976_268_691_85e-3,
];

const SMALL: f64 = 0.468_75;
/// erfc underflows to zero beyond this point.
const BIG: f64 = 26.543;

/// `exp(-y^2)` evaluated as a product of two exponentials so that the
/// rounding error of `y^2` does not get amplified.
fn exp_neg_square(y: f64) -> f64 {
    let head = (y * 16.0).trunc() / 16.0;
    let del = (y - head) * (y + head);
    (-head * head).exp() * (-del).exp()
}

/// Complementary error function `erfc(x) = 1 - erf(x)`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let y = x.abs();
    if y <= SMALL {
        let z = y * y;
        let num = (((A[4] * z + A[0]) * z + A[1]) * z + A[2]) * z + A[3];
        let den = (((z + B[0]) * z + B[1]) * z + B[2]) * z + B[3];
        return 1.0 - x * num / den;
    }
    let upper = if y >= BIG {
        0.0
    } else if y <= 4.0 {
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        (num + C[7]) / (den + D[7]) * exp_neg_square(y)
    } else {
        let z = 1.0 / (y * y);
        let mut num = P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + P[i]) * z;
            den = (den + Q[i]) * z;
        }
        let r = z * (num + P[4]) / (den + Q[4]);
        (FRAC_1_SQRT_PI - r) / y * exp_neg_square(y)
    };
    if x < 0.0 {
        2.0 - upper
    } else {
        upper
    }
}

/// Upper-tail probability of the standard normal, `P(Z > r)`.
pub fn std_normal_survival(r: f64) -> f64 {
    0.5 * erfc(r * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(r: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * r * r).exp()
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_nan() || sigma < SIGMA_MIN {
        return Err(Error::SigmaTooSmall {
            sigma,
            min: SIGMA_MIN,
        });
    }
    Ok(())
}

/// Density of `N(mu, sigma^2)` at `u`.
pub fn normal_pdf(u: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let z = (u - mu) / sigma;
    Ok((-0.5 * z * z).exp() / (2.0 * PI * sigma * sigma).sqrt())
}

/// Survival function of `N(mu, sigma^2)` at `gamma`: the probability that a
/// draw exceeds `gamma`.
pub fn normal_survival(gamma: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(std_normal_survival((gamma - mu) / sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pdf_examples() {
        assert!((normal_pdf(0.0, 0.0, 1.0).unwrap() - 0.398_942_280_4).abs() < 1e-10);
        let s = 0.37;
        let peak = normal_pdf(1.3, 1.3, s).unwrap();
        assert!((peak - 1.0 / (s * (2.0 * PI).sqrt())).abs() < 1e-14);
        assert!((normal_pdf(1.3 + 0.2, 1.3, s).unwrap() - normal_pdf(1.3 - 0.2, 1.3, s).unwrap()).abs() < 1e-15);
        assert!(normal_pdf(0.0, 0.0, 1e-4).is_err());
    }

    #[test]
    fn survival_examples() {
        assert_eq!(normal_survival(0.3, 0.3, 0.8).unwrap(), 0.5);
        assert!((normal_survival(0.0, 1.0, 1.0).unwrap() - 0.841_344_746_1).abs() < 1e-10);
        let tail = normal_survival(10.0, 0.0, 1.0).unwrap();
        assert!(tail > 0.0 && tail < 1e-20, "{tail}");
        assert!((normal_survival(0.1, 0.6, 1.0).unwrap() - 0.691_462_461_3).abs() < 1e-10);
        assert!(normal_survival(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn erfc_reference_points() {
        // erfc(0.5), erfc(1), erfc(2), erfc(5), erfc(-1)
        let cases = [
            (0.5, 0.479_500_122_186_953_5),
            (1.0, 0.157_299_207_050_285_13),
            (2.0, 0.004_677_734_981_047_266),
            (5.0, 1.537_459_794_428_034_8e-12),
            (-1.0, 1.842_700_792_949_714_9),
        ];
        for (x, want) in cases {
            let got = erfc(x);
            assert!(((got - want) / want).abs() < 1e-14, "erfc({x}) = {got}, want {want}");
        }
        assert_eq!(erfc(30.0), 0.0);
        assert_eq!(erfc(-30.0), 2.0);
    }

    proptest! {
        #[test]
        fn survival_monotone(gamma in -3.0f64..3.0, mu in -3.0f64..3.0, sigma in 0.05f64..3.0, step in 1e-3f64..1.0) {
            let base = normal_survival(gamma, mu, sigma).unwrap();
            let up = normal_survival(gamma + step, mu, sigma).unwrap();
            let right = normal_survival(gamma, mu + step, sigma).unwrap();
            prop_assert!(up <= base && right >= base);
            // away from saturation the change exceeds rounding
            if ((gamma - mu) / sigma).abs() < 5.0 && ((gamma + step - mu) / sigma).abs() < 5.0 {
                prop_assert!(up < base);
            }
            if ((gamma - mu) / sigma).abs() < 5.0 && ((gamma - mu - step) / sigma).abs() < 5.0 {
                prop_assert!(right > base);
            }
        }

        #[test]
        fn survival_in_unit_interval(gamma in -1e3f64..1e3, mu in -1e3f64..1e3, sigma in 1e-3f64..1e3) {
            let s = normal_survival(gamma, mu, sigma).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn survival_strictly_inside_for_moderate_scores(r in -8.0f64..8.0) {
            let s = std_normal_survival(r);
            prop_assert!(s > 0.0 && s < 1.0);
        }
    }
}
