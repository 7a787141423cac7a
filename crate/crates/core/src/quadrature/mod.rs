//! Quadrature rules `(v_j, w_j)` under the standard Gaussian weight (or the
//! Lebesgue weight on an interval), and their application to integrands.

mod gauss;
mod sampling;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

pub use gauss::{gauss_hermite, gauss_legendre, midpoint, unit_to_gaussian};
pub use sampling::{
    halton, halton_unit, mlhs, mlhs_unit, monte_carlo_gaussian, radical_inverse, HALTON_PRIMES,
};

/// Largest tensor grid [`product_rule`] will build.
pub const MAX_PRODUCT_POINTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// Weights integrate against the standard normal density (unit mass).
    GaussianDensity,
    /// Weights integrate against `dv` on `[a, b]`.
    LebesgueOnInterval { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Product,
    MonteCarlo,
    Halton,
    Mlhs,
    SparseGrid,
}

/// A one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    kind: WeightKind,
}

impl<T: Real> Rule1d<T> {
    pub(crate) fn from_parts(nodes: Vec<T>, weights: Vec<T>, kind: WeightKind) -> Self {
        debug_assert_eq!(nodes.len(), weights.len());
        Self {
            nodes,
            weights,
            kind,
        }
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight_kind(&self) -> WeightKind {
        self.kind
    }

    /// Number of nodes.
    pub fn r(&self) -> usize {
        self.nodes.len()
    }

    pub fn apply<F: FnMut(T) -> T>(&self, mut g: F) -> Result<T> {
        let mut acc = T::zero();
        for (j, (&v, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let gv = g(v);
            if !gv.is_finite() {
                return Err(Error::NonFiniteIntegrand {
                    index: j,
                    point: vec![v.as_f64()],
                    value: gv.as_f64(),
                });
            }
            acc = acc + w * gv;
        }
        Ok(acc)
    }

    /// Views the rule as a one-dimensional [`RuleNd`].
    pub fn to_nd(&self) -> RuleNd<T> {
        RuleNd {
            d: 1,
            points: self.nodes.clone(),
            weights: self.weights.clone(),
            construction: Construction::Product,
            kind: self.kind,
        }
    }
}

/// A rule on `d` dimensions. Points are stored row-major, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleNd<T> {
    d: usize,
    points: Vec<T>,
    weights: Vec<T>,
    construction: Construction,
    kind: WeightKind,
}

impl<T: Real> RuleNd<T> {
    pub(crate) fn from_parts(
        d: usize,
        points: Vec<T>,
        weights: Vec<T>,
        construction: Construction,
        kind: WeightKind,
    ) -> Self {
        debug_assert_eq!(points.len(), d * weights.len());
        Self {
            d,
            points,
            weights,
            construction,
            kind,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of points.
    pub fn r(&self) -> usize {
        self.weights.len()
    }

    pub fn point(&self, j: usize) -> &[T] {
        &self.points[j * self.d..(j + 1) * self.d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.points.chunks_exact(self.d)
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn weight_kind(&self) -> WeightKind {
        self.kind
    }

    pub fn weight_sum(&self) -> T {
        self.weights.iter().fold(T::zero(), |a, &w| a + w)
    }

    pub fn has_negative_weights(&self) -> bool {
        self.weights.iter().any(|&w| w < T::zero())
    }

    /// `Σ_j w_j g(v_j)`, summed in node order.
    pub fn apply<F: FnMut(&[T]) -> T>(&self, mut g: F) -> Result<T> {
        let mut acc = T::zero();
        for (j, (p, &w)) in self.points().zip(&self.weights).enumerate() {
            let gv = g(p);
            if !gv.is_finite() {
                return Err(self.non_finite(j, gv));
            }
            acc = acc + w * gv;
        }
        Ok(acc)
    }

    /// Like [`RuleNd::apply`] with Neumaier compensated summation.
    pub fn apply_compensated<F: FnMut(&[T]) -> T>(&self, mut g: F) -> Result<T> {
        let mut sum = T::zero();
        let mut comp = T::zero();
        for (j, (p, &w)) in self.points().zip(&self.weights).enumerate() {
            let gv = g(p);
            if !gv.is_finite() {
                return Err(self.non_finite(j, gv));
            }
            let term = w * gv;
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp = comp + ((sum - t) + term);
            } else {
                comp = comp + ((term - t) + sum);
            }
            sum = t;
        }
        Ok(sum + comp)
    }

    fn non_finite(&self, j: usize, value: T) -> Error {
        Error::NonFiniteIntegrand {
            index: j,
            point: self.point(j).iter().map(|x| x.as_f64()).collect(),
            value: value.as_f64(),
        }
    }

    /// Writes `index,node_1..node_d,weight` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = String::from("index");
        for k in 1..=self.d {
            header.push_str(&format!(",node_{k}"));
        }
        header.push_str(",weight");
        writeln!(out, "{header}")?;
        for (j, (p, w)) in self.points().zip(&self.weights).enumerate() {
            let mut line = j.to_string();
            for x in p {
                line.push_str(&format!(",{:.16e}", x.as_f64()));
            }
            line.push_str(&format!(",{:.16e}", w.as_f64()));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Full tensor product of a 1-D rule with itself, `d` times.
pub fn product_rule<T: Real>(rule: &Rule1d<T>, d: usize) -> Result<RuleNd<T>> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let r = rule.r();
    let total = u32::try_from(d)
        .ok()
        .and_then(|d| r.checked_pow(d))
        .filter(|&n| n <= MAX_PRODUCT_POINTS)
        .ok_or_else(|| {
            Error::ResourceLimit(format!(
                "tensor grid {r}^{d} exceeds {MAX_PRODUCT_POINTS} points"
            ))
        })?;
    // Lebesgue products integrate over the cube [a, b]^d.
    let kind = rule.kind;
    let mut points = Vec::with_capacity(total * d);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let mut w = T::one();
        for &i in &idx {
            points.push(rule.nodes[i]);
            w = w * rule.weights[i];
        }
        weights.push(w);
        // odometer, last coordinate fastest
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < r {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(RuleNd::from_parts(
        d,
        points,
        weights,
        Construction::Product,
        kind,
    ))
}
