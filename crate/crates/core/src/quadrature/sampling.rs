//! Equal-weight rules: Monte Carlo, Halton and modified Latin hypercube.

use rand::distr::{Distribution, Open01};
use rand::seq::SliceRandom;
use rand_distr::StandardNormal;

use super::{Construction, RuleNd, WeightKind};
use crate::rng::{self, streams};
use crate::special::probit;
use crate::{Error, Real, Result};

/// Bases for the Halton coordinates, one prime per dimension.
pub const HALTON_PRIMES: [u64; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

fn check_size(r: usize, d: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::invalid("rule needs r >= 1"));
    }
    if d == 0 {
        return Err(Error::invalid("rule needs d >= 1"));
    }
    Ok(())
}

fn equal_weights<T: Real>(r: usize) -> Vec<T> {
    vec![T::one() / T::from_usize_lossy(r); r]
}

/// `r` i.i.d. standard normal points in `d` dimensions, weights `1/r`.
pub fn monte_carlo_gaussian<T: Real>(r: usize, d: usize, seed: u64) -> Result<RuleNd<T>> {
    check_size(r, d)?;
    let mut rng = rng::stream(seed, streams::RULE);
    let points = (0..r * d)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            T::c(x)
        })
        .collect();
    Ok(RuleNd::from_parts(
        d,
        points,
        equal_weights(r),
        Construction::MonteCarlo,
        WeightKind::GaussianDensity,
    ))
}

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    value
}

/// Halton points on the unit cube at indices `skip..skip + r`, row-major.
pub fn halton_unit(r: usize, d: usize, skip: u64) -> Result<Vec<f64>> {
    check_size(r, d)?;
    if d > HALTON_PRIMES.len() {
        return Err(Error::UnsupportedDimension {
            d,
            max: HALTON_PRIMES.len(),
        });
    }
    let mut pts = Vec::with_capacity(r * d);
    for i in 0..r as u64 {
        for &p in &HALTON_PRIMES[..d] {
            pts.push(radical_inverse(skip + i, p));
        }
    }
    Ok(pts)
}

/// Plain (unscrambled) Halton rule mapped to the Gaussian weight.
///
/// `skip` must be at least 1: index 0 is the origin of the cube, which the
/// inverse normal distribution function sends to `-∞`.
pub fn halton<T: Real>(r: usize, d: usize, skip: u64) -> Result<RuleNd<T>> {
    if skip == 0 {
        return Err(Error::invalid(
            "halton skip must be >= 1 (index 0 maps to -infinity)",
        ));
    }
    let unit = halton_unit(r, d, skip)?;
    Ok(RuleNd::from_parts(
        d,
        unit.into_iter().map(|u| T::c(probit(u))).collect(),
        equal_weights(r),
        Construction::Halton,
        WeightKind::GaussianDensity,
    ))
}

/// Modified Latin hypercube points on the unit cube, row-major.
///
/// Each coordinate is the shifted lattice `(i + u) / r` with one uniform
/// shift `u` per coordinate, permuted independently across coordinates.
pub fn mlhs_unit(r: usize, d: usize, seed: u64) -> Result<Vec<f64>> {
    check_size(r, d)?;
    let mut rng = rng::stream(seed, streams::RULE);
    let mut pts = vec![0.0; r * d];
    let mut column: Vec<f64> = Vec::with_capacity(r);
    for k in 0..d {
        let shift: f64 = Open01.sample(&mut rng);
        column.clear();
        column.extend((0..r).map(|i| (i as f64 + shift) / r as f64));
        column.shuffle(&mut rng);
        for (i, &u) in column.iter().enumerate() {
            pts[i * d + k] = u;
        }
    }
    Ok(pts)
}

/// Modified Latin hypercube rule mapped to the Gaussian weight.
pub fn mlhs<T: Real>(r: usize, d: usize, seed: u64) -> Result<RuleNd<T>> {
    let unit = mlhs_unit(r, d, seed)?;
    Ok(RuleNd::from_parts(
        d,
        unit.into_iter().map(|u| T::c(probit(u))).collect(),
        equal_weights(r),
        Construction::Mlhs,
        WeightKind::GaussianDensity,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_by_hand() {
        let b2: Vec<f64> = (1..=4).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(b2, vec![0.5, 0.25, 0.75, 0.125]);
        let b3: Vec<f64> = (1..=3).map(|i| radical_inverse(i, 3)).collect();
        for (got, want) in b3.iter().zip([1.0 / 3.0, 2.0 / 3.0, 1.0 / 9.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn single_halton_point_is_the_median() {
        let rule = halton::<f64>(1, 1, 1).unwrap();
        assert_eq!(rule.point(0), &[0.0]);
        assert_eq!(rule.weights(), &[1.0]);
    }

    #[test]
    fn halton_dimension_and_skip_limits() {
        assert!(matches!(
            halton::<f64>(4, 21, 1),
            Err(Error::UnsupportedDimension { d: 21, max: 20 })
        ));
        assert!(halton::<f64>(4, 20, 1).is_ok());
        assert!(matches!(
            halton::<f64>(4, 1, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn halton_discrepancy_proxy() {
        for r in [64usize, 256, 1024] {
            let mut u = halton_unit(r, 1, 1).unwrap();
            u.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // Kolmogorov distance of the empirical CDF to the uniform one
            let dev = u
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let lo = (x - i as f64 / r as f64).abs();
                    let hi = ((i + 1) as f64 / r as f64 - x).abs();
                    lo.max(hi)
                })
                .fold(0.0, f64::max);
            assert!(dev <= 3.0 * (r as f64).ln() / r as f64, "r={r}: {dev}");
        }
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let a = monte_carlo_gaussian::<f64>(3, 1, 99).unwrap();
        let b = monte_carlo_gaussian::<f64>(3, 1, 99).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_gaussian::<f64>(3, 1, 100).unwrap();
        assert_ne!(a, c);
        assert!(a.weights().iter().all(|&w| w == 1.0 / 3.0));
    }

    #[test]
    fn monte_carlo_moments() {
        let r = 100_000;
        let one = monte_carlo_gaussian::<f64>(r, 1, 7).unwrap();
        let mean = one.apply(|v| v[0]).unwrap();
        assert!(mean.abs() < 4.0 / (r as f64).sqrt());

        let two = monte_carlo_gaussian::<f64>(r, 2, 8).unwrap();
        let m0 = two.apply(|v| v[0]).unwrap();
        let m1 = two.apply(|v| v[1]).unwrap();
        let c00 = two.apply(|v| (v[0] - m0).powi(2)).unwrap();
        let c11 = two.apply(|v| (v[1] - m1).powi(2)).unwrap();
        let c01 = two.apply(|v| (v[0] - m0) * (v[1] - m1)).unwrap();
        assert!((c00 - 1.0).abs() < 0.02 && (c11 - 1.0).abs() < 0.02 && c01.abs() < 0.02);
    }

    #[test]
    fn mlhs_stratifies_each_coordinate() {
        for r in [1usize, 2, 7, 50] {
            let mut u = mlhs_unit(r, 1, 3).unwrap();
            u.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for w in u.windows(2) {
                assert!((w[1] - w[0] - 1.0 / r as f64).abs() < 1e-12);
            }
            for (i, x) in u.iter().enumerate() {
                assert!(*x > i as f64 / r as f64 && *x < (i + 1) as f64 / r as f64);
            }
        }
        let pts = mlhs_unit(2, 1, 11).unwrap();
        assert_eq!(pts.iter().filter(|&&x| x < 0.5).count(), 1);
        assert_eq!(mlhs::<f64>(9, 3, 4).unwrap(), mlhs::<f64>(9, 3, 4).unwrap());
    }

    #[test]
    fn mlhs_coordinates_are_permuted_independently() {
        let pts = mlhs_unit(40, 2, 21).unwrap();
        let rank = |k: usize| -> Vec<usize> {
            (0..40).map(|i| (pts[i * 2 + k] * 40.0) as usize).collect()
        };
        assert_ne!(rank(0), rank(1));
    }
}
