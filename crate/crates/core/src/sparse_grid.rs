//! Smolyak sparse grids built from Gauss-Hermite rules by the combination
//! technique.
//!
//! For dimension `d` and level `L` (with `q = L + d - 1`) the rule is
//!
//! ```text
//! A(L, d) = Σ_{q-d+1 <= |l| <= q} (-1)^{q-|l|} C(d-1, q-|l|) U_{m(l_1)} ⊗ … ⊗ U_{m(l_d)}
//! ```
//!
//! with the linear level-to-size map `m(1) = 1`, `m(l) = 2l - 1`. Points that
//! coincide after rounding to `1e-12` are merged and their weights summed.
//! Weights can be negative.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::quadrature::{gauss_hermite, Construction, Rule1d, RuleNd, WeightKind};
use crate::{Error, Real, Result};

pub const DEFAULT_POINT_CAP: usize = 1_000_000;
const MERGE_SCALE: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparseFamily {
    GaussHermite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseGridSpec {
    pub d: usize,
    pub level: usize,
    pub family: SparseFamily,
    pub point_cap: usize,
}

impl SparseGridSpec {
    pub fn new(d: usize, level: usize) -> Result<Self> {
        let spec = Self {
            d,
            level,
            family: SparseFamily::GaussHermite,
            point_cap: DEFAULT_POINT_CAP,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_point_cap(mut self, cap: usize) -> Self {
        self.point_cap = cap;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.level == 0 {
            return Err(Error::invalid(format!(
                "sparse grid needs d >= 1 and level >= 1, got d={} level={}",
                self.d, self.level
            )));
        }
        Ok(())
    }
}

/// Number of nodes of the 1-D rule used at `level`.
pub fn level_size(level: usize) -> usize {
    if level <= 1 {
        1
    } else {
        2 * level - 1
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Multi-indices `l >= 1` of the combination formula with their coefficients.
fn combination_terms(d: usize, level: usize) -> Vec<(Vec<usize>, f64)> {
    let q = level + d - 1;
    let lo = d.max((q + 1).saturating_sub(d));
    let mut out = Vec::new();
    let mut idx = vec![1usize; d];
    fn rec(
        k: usize,
        sum: usize,
        idx: &mut Vec<usize>,
        lo: usize,
        q: usize,
        d: usize,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        if k == d {
            if sum >= lo {
                let gap = q - sum;
                let sign = if gap.is_multiple_of(2) { 1.0 } else { -1.0 };
                out.push((idx.clone(), sign * binomial(d - 1, gap)));
            }
            return;
        }
        let remaining = d - k - 1;
        let mut l = 1;
        while sum + l + remaining <= q {
            idx[k] = l;
            rec(k + 1, sum + l, idx, lo, q, d, out);
            l += 1;
        }
    }
    rec(0, 0, &mut idx, lo, q, d, &mut out);
    out
}

fn merge_key<T: Real>(p: &[T]) -> Vec<i64> {
    p.iter()
        .map(|x| (x.as_f64() * MERGE_SCALE).round() as i64)
        .collect()
}

fn for_each_tensor_point<T: Real, F: FnMut(&[T], T) -> Result<()>>(
    rules: &[&Rule1d<T>],
    mut f: F,
) -> Result<()> {
    let d = rules.len();
    let mut idx = vec![0usize; d];
    let mut pt = vec![T::zero(); d];
    loop {
        let mut w = T::one();
        for k in 0..d {
            pt[k] = rules[k].nodes()[idx[k]];
            w = w * rules[k].weights()[idx[k]];
        }
        f(&pt, w)?;
        let mut k = d;
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < rules[k].r() {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn level_rules<T: Real>(level: usize) -> Result<Vec<Rule1d<T>>> {
    (1..=level).map(|l| gauss_hermite(level_size(l))).collect()
}

fn cap_error(cap: usize) -> Error {
    Error::ResourceLimit(format!("sparse grid exceeds {cap} points"))
}

/// Builds the Smolyak rule for `spec`.
pub fn smolyak<T: Real>(spec: &SparseGridSpec) -> Result<RuleNd<T>> {
    spec.validate()?;
    let rules = level_rules::<T>(spec.level)?;
    let mut merged: BTreeMap<Vec<i64>, (Vec<T>, T)> = BTreeMap::new();
    for (multi, coef) in combination_terms(spec.d, spec.level) {
        let factors: Vec<&Rule1d<T>> = multi.iter().map(|&l| &rules[l - 1]).collect();
        let coef = T::c(coef);
        for_each_tensor_point(&factors, |p, w| {
            let key = merge_key(p);
            if let Some(entry) = merged.get_mut(&key) {
                entry.1 = entry.1 + coef * w;
            } else {
                if merged.len() >= spec.point_cap {
                    return Err(cap_error(spec.point_cap));
                }
                merged.insert(key, (p.to_vec(), coef * w));
            }
            Ok(())
        })?;
    }
    let mut points = Vec::with_capacity(merged.len() * spec.d);
    let mut weights = Vec::with_capacity(merged.len());
    for (_, (p, w)) in merged {
        points.extend(p);
        weights.push(w);
    }
    Ok(RuleNd::from_parts(
        spec.d,
        points,
        weights,
        Construction::SparseGrid,
        WeightKind::GaussianDensity,
    ))
}

/// Merged point count of [`smolyak`] without forming weights.
pub fn sparse_grid_size(spec: &SparseGridSpec) -> Result<usize> {
    spec.validate()?;
    let rules = level_rules::<f64>(spec.level)?;
    let mut keys = BTreeSet::new();
    for (multi, _) in combination_terms(spec.d, spec.level) {
        let factors: Vec<&Rule1d<f64>> = multi.iter().map(|&l| &rules[l - 1]).collect();
        for_each_tensor_point(&factors, |p, _| {
            keys.insert(merge_key(p));
            if keys.len() > spec.point_cap {
                return Err(cap_error(spec.point_cap));
            }
            Ok(())
        })?;
    }
    Ok(keys.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::product_rule;

    #[test]
    fn one_dimension_degenerates_to_gauss_hermite() {
        for level in 1..=6 {
            let sg = smolyak::<f64>(&SparseGridSpec::new(1, level).unwrap()).unwrap();
            let gh = gauss_hermite::<f64>(level_size(level)).unwrap();
            assert_eq!(sg.r(), gh.r());
            for (p, &x) in sg.points().zip(gh.nodes()) {
                assert!((p[0] - x).abs() < 1e-14);
            }
            for (a, b) in sg.weights().iter().zip(gh.weights()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sizes_by_hand() {
        assert_eq!(
            sparse_grid_size(&SparseGridSpec::new(1, 3).unwrap()).unwrap(),
            5
        );
        assert_eq!(
            sparse_grid_size(&SparseGridSpec::new(2, 1).unwrap()).unwrap(),
            1
        );
        assert_eq!(
            sparse_grid_size(&SparseGridSpec::new(2, 2).unwrap()).unwrap(),
            5
        );
        for (d, level) in [(2, 4), (3, 3), (4, 2)] {
            let spec = SparseGridSpec::new(d, level).unwrap();
            assert_eq!(
                sparse_grid_size(&spec).unwrap(),
                smolyak::<f64>(&spec).unwrap().r()
            );
        }
    }

    #[test]
    fn unit_mass_survives_combination() {
        for d in 1..=4 {
            for level in 1..=5 {
                let rule = smolyak::<f64>(&SparseGridSpec::new(d, level).unwrap()).unwrap();
                assert!(
                    (rule.apply(|_| 1.0).unwrap() - 1.0).abs() <= 1e-10,
                    "d={d} L={level}"
                );
            }
        }
    }

    #[test]
    fn second_moment_matches_tensor_oracle() {
        let sg = smolyak::<f64>(&SparseGridSpec::new(2, 3).unwrap()).unwrap();
        let tensor = product_rule(&gauss_hermite::<f64>(7).unwrap(), 2).unwrap();
        let oracle = tensor.apply(|v| v[0] * v[0]).unwrap();
        assert!((oracle - 1.0).abs() < 1e-12);
        assert!((sg.apply(|v| v[0] * v[0]).unwrap() - oracle).abs() <= 1e-8);
    }

    #[test]
    fn exact_on_low_order_cross_terms() {
        let moment = |k: i32| -> f64 {
            if k % 2 == 1 {
                0.0
            } else {
                (1..k).step_by(2).map(|x| x as f64).product()
            }
        };
        for level in 3..=5 {
            let sg = smolyak::<f64>(&SparseGridSpec::new(2, level).unwrap()).unwrap();
            for a in 0..=3 {
                for b in 0..=(3 - a) {
                    let got = sg.apply(|v| v[0].powi(a) * v[1].powi(b)).unwrap();
                    assert!(
                        (got - moment(a) * moment(b)).abs() <= 1e-8,
                        "L={level} a={a} b={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn negative_weights_appear_from_level_three() {
        let l2 = smolyak::<f64>(&SparseGridSpec::new(2, 2).unwrap()).unwrap();
        assert!(!l2.has_negative_weights());
        let l3 = smolyak::<f64>(&SparseGridSpec::new(2, 3).unwrap()).unwrap();
        assert!(l3.has_negative_weights());
        // (±√3, 0) picks up 1/9 from U3⊗U3 and -1/6 from U3⊗U1
        let idx = l3
            .points()
            .position(|p| (p[0] - 3f64.sqrt()).abs() < 1e-12 && p[1] == 0.0)
            .unwrap();
        assert!((l3.weights()[idx] + 1.0 / 18.0).abs() < 1e-14);
    }

    #[test]
    fn point_cap_is_enforced() {
        let spec = SparseGridSpec::new(3, 6).unwrap().with_point_cap(10);
        assert!(matches!(
            smolyak::<f64>(&spec),
            Err(Error::ResourceLimit(_))
        ));
        assert!(matches!(
            sparse_grid_size(&spec),
            Err(Error::ResourceLimit(_))
        ));
        assert!(SparseGridSpec::new(0, 2).is_err());
        assert!(SparseGridSpec::new(2, 0).is_err());
    }
}
