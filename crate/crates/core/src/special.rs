//! Standard normal density, distribution function and its inverse.

use crate::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, evaluated through `erfc` so that
/// the lower tail keeps full relative accuracy.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Inverse of the standard normal distribution function.
///
/// Wichura's AS241 rational approximation gives the starting value, which is
/// then refined by one Halley step against [`normal_cdf`]. Work is done in the
/// lower tail `min(u, 1 - u)` so `Φ⁻¹(1 - u) = -Φ⁻¹(u)` holds exactly
/// whenever `1 - u` is representable.
pub fn inverse_normal_cdf(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!(
            "inverse normal cdf needs 0 < u < 1, got {u}"
        )));
    }
    if u == 0.5 {
        return Ok(0.0);
    }
    let (p, sign) = if u < 0.5 { (u, -1.0) } else { (1.0 - u, 1.0) };
    let x = -as241_upper(p);
    Ok(sign * -halley_lower(x, p))
}

/// Maps a point of the open unit interval to the Gaussian weight. Panics only
/// if `u` lies outside `(0, 1)`, which the rule constructors rule out.
#[inline]
pub(crate) fn probit(u: f64) -> f64 {
    inverse_normal_cdf(u).expect("unit-interval point")
}

// Refines a lower-tail quantile x < 0 of probability p.
fn halley_lower(x: f64, p: f64) -> f64 {
    let e = normal_cdf(x) - p;
    let t = e / normal_pdf(x);
    if !t.is_finite() {
        return x;
    }
    let refined = x - t / (1.0 + 0.5 * x * t);
    if refined.is_finite() {
        refined
    } else {
        x
    }
}

// AS241 (PPND16) for p <= 0.5, returning the positive quantile of 1 - p.
// Coefficients as published.
#[allow(clippy::excessive_precision, clippy::inconsistent_digit_grouping)]
fn as241_upper(p: f64) -> f64 {
    let q = 0.5 - p;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
            + 67265.770_927_008_7)
            * r
            + 45921.953_931_549_87)
            * r
            + 13731.693_765_509_461)
            * r
            + 1971.590_950_306_551_4)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((5226.495_278_852_545_9 * r + 28729.085_735_721_943) * r
            + 39307.895_800_092_71)
            * r
            + 21213.794_301_586_596)
            * r
            + 5394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_91)
            * r
            + 1.0;
        return q * num / den;
    }
    let mut r = (-p.ln()).sqrt();
    if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_6)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_6;
        let den = ((((((1.050_750_071_644_416_8e-9 * r + 5.475_938_084_995_345e-4) * r
            + 0.015_198_666_563_616_457)
            * r
            + 0.148_103_976_427_480_07)
            * r
            + 0.689_767_334_985_1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103_5;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 0.014_875_361_290_850_615)
            * r
            + 0.136_929_880_922_735_8)
            * r
            + 0.599_832_206_555_887_9)
            * r
            + 1.0;
        num / den
    }
}
