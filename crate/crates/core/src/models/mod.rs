//! Likelihood integrands `φ(v, z, θ)` with analytic parameter derivatives.
//!
//! Every integrand is written against the standard normal weight on the
//! latent variable `v`, so a likelihood contribution is
//! `f(z; θ) = ∫ φ(v, z, θ) ω(v) dv` and its derivatives move under the
//! integral sign.

mod dataset;

use std::fmt::Debug;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::special::{normal_cdf, normal_pdf};
use crate::{Error, Result};

pub use dataset::{generate_dataset, Dataset, Dgp, Provenance};

/// Closed coordinate-wise bounds for θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ThetaBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::config("theta box bounds differ in length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::config(format!(
                "theta box needs lower <= upper, got {lower:?} / {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn empty() -> Self {
        Self {
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(t, (l, u))| l <= t && t <= u)
    }

    pub fn project(&self, theta: &mut [f64]) {
        for (t, (l, u)) in theta.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *t = t.clamp(*l, *u);
        }
    }

    /// Coordinate `i` has `lower == upper`.
    pub fn is_pinned(&self, i: usize) -> bool {
        self.lower[i] == self.upper[i]
    }

    /// Evenly spaced points per coordinate, `per_axis` of them, as a full grid.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| {
                if per_axis <= 1 || l == u {
                    vec![0.5 * (l + u)]
                } else {
                    (0..per_axis)
                        .map(|i| l + (u - l) * i as f64 / (per_axis - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&x| {
                        let mut p = prefix.clone();
                        p.push(x);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// A likelihood integrand with its θ-derivatives.
pub trait Integrand: Debug + Send + Sync {
    fn name(&self) -> String;
    /// Integration dimension `d`.
    fn dim_v(&self) -> usize;
    /// Parameter dimension `p`.
    fn dim_theta(&self) -> usize;
    /// Data record dimension `q`.
    fn dim_z(&self) -> usize;
    fn theta_box(&self) -> &ThetaBox;

    fn eval(&self, v: &[f64], z: &[f64], theta: &[f64]) -> f64;

    fn has_derivatives(&self) -> bool {
        true
    }

    /// Returns φ and writes `∇_θφ` into `grad` (length `p`) and `∇_θθφ`
    /// row-major into `hess` (length `p²`).
    fn eval_derivs(
        &self,
        v: &[f64],
        z: &[f64],
        theta: &[f64],
        grad: &mut [f64],
        hess: &mut [f64],
    ) -> Result<f64>;

    /// Closed-form `f(z; θ)` when one exists.
    fn exact(&self, _z: &[f64], _theta: &[f64]) -> Option<f64> {
        None
    }

    /// Closed-form `f` with its θ-derivatives, when available.
    fn exact_derivs(
        &self,
        _z: &[f64],
        _theta: &[f64],
        _grad: &mut [f64],
        _hess: &mut [f64],
    ) -> Option<f64> {
        None
    }

    fn grad_theta(&self, v: &[f64], z: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        let p = self.dim_theta();
        let mut g = vec![0.0; p];
        let mut h = vec![0.0; p * p];
        self.eval_derivs(v, z, theta, &mut g, &mut h)?;
        Ok(g)
    }

    fn hess_theta(&self, v: &[f64], z: &[f64], theta: &[f64]) -> Result<DMatrix<f64>> {
        let p = self.dim_theta();
        let mut g = vec![0.0; p];
        let mut h = vec![0.0; p * p];
        self.eval_derivs(v, z, theta, &mut g, &mut h)?;
        Ok(DMatrix::from_row_slice(p, p, &h))
    }
}

/// Logistic function, evaluated without overflow.
#[inline]
pub fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Random-coefficient logit with one latent coefficient, θ = (μ, σ):
/// `φ = 1 / (1 + exp(-z (σ v + μ)))`.
#[derive(Debug, Clone)]
pub struct MixedLogit1d {
    bounds: ThetaBox,
}

pub fn mixed_logit_1d() -> MixedLogit1d {
    MixedLogit1d {
        bounds: ThetaBox {
            lower: vec![-10.0, 0.01],
            upper: vec![10.0, 10.0],
        },
    }
}

impl MixedLogit1d {
    pub fn with_theta_box(mut self, bounds: ThetaBox) -> Result<Self> {
        if bounds.dim() != 2 {
            return Err(Error::config(
                "mixed logit theta box must have 2 coordinates",
            ));
        }
        self.bounds = bounds;
        Ok(self)
    }
}

impl Integrand for MixedLogit1d {
    fn name(&self) -> String {
        "mixed_logit_1d".into()
    }
    fn dim_v(&self) -> usize {
        1
    }
    fn dim_theta(&self) -> usize {
        2
    }
    fn dim_z(&self) -> usize {
        1
    }
    fn theta_box(&self) -> &ThetaBox {
        &self.bounds
    }

    fn eval(&self, v: &[f64], z: &[f64], theta: &[f64]) -> f64 {
        logistic(z[0] * (theta[1] * v[0] + theta[0]))
    }

    fn eval_derivs(
        &self,
        v: &[f64],
        z: &[f64],
        theta: &[f64],
        grad: &mut [f64],
        hess: &mut [f64],
    ) -> Result<f64> {
        let (z, v) = (z[0], v[0]);
        let g = logistic(z * (theta[1] * v + theta[0]));
        // g' = g - g², g'' = g' (1 - 2g)
        let d1 = g - g * g;
        let d2 = d1 * (1.0 - 2.0 * g);
        let ds = [z, z * v];
        for i in 0..2 {
            grad[i] = d1 * ds[i];
            for j in 0..2 {
                hess[i * 2 + j] = d2 * ds[i] * ds[j];
            }
        }
        Ok(g)
    }
}

/// Multivariate random-coefficient logit, θ = (μ, vech(C)) with `C` the
/// lower-triangular Cholesky factor: `φ = 1 / (1 + exp(-z·C(v + μ)))`.
///
/// `vech(C)` lists the rows of the lower triangle in order, with the diagonal
/// entry first in each row: `C₀₀, C₁₁, C₁₀, C₂₂, C₂₀, C₂₁, …`.
#[derive(Debug, Clone)]
pub struct RcLogitMv {
    d: usize,
    bounds: ThetaBox,
}

pub fn rc_logit_mv(d: usize) -> Result<RcLogitMv> {
    if d == 0 {
        return Err(Error::invalid("rc_logit_mv needs d >= 1"));
    }
    let p = d + d * (d + 1) / 2;
    let mut lower = vec![-10.0; p];
    let upper = vec![10.0; p];
    for i in 0..d {
        lower[d + vech_offset(i, i)] = 0.01;
    }
    Ok(RcLogitMv {
        d,
        bounds: ThetaBox { lower, upper },
    })
}

/// Position of `C[i][j]` (`j <= i`) inside `vech(C)`.
pub fn vech_offset(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    let row = i * (i + 1) / 2;
    if i == j {
        row
    } else {
        row + j + 1
    }
}

impl RcLogitMv {
    pub fn with_theta_box(mut self, bounds: ThetaBox) -> Result<Self> {
        if bounds.dim() != self.dim_theta() {
            return Err(Error::config(
                "rc_logit_mv theta box has the wrong dimension",
            ));
        }
        for i in 0..self.d {
            let k = self.d + vech_offset(i, i);
            if bounds.lower[k] <= 0.0 {
                return Err(Error::config(format!(
                    "Cholesky diagonal C[{i}][{i}] must be bounded away from 0, lower bound {}",
                    bounds.lower[k]
                )));
            }
        }
        self.bounds = bounds;
        Ok(self)
    }

    /// Parameter vector from `μ` and a lower-triangular `C` given by rows.
    pub fn pack_theta(&self, mu: &[f64], chol: &[Vec<f64>]) -> Vec<f64> {
        let d = self.d;
        let mut theta = vec![0.0; self.dim_theta()];
        theta[..d].copy_from_slice(mu);
        for i in 0..d {
            for j in 0..=i {
                theta[d + vech_offset(i, j)] = chol[i][j];
            }
        }
        theta
    }

    fn chol(&self, theta: &[f64], i: usize, j: usize) -> f64 {
        theta[self.d + vech_offset(i, j)]
    }

    fn index(&self, v: &[f64], z: &[f64], theta: &[f64]) -> f64 {
        let d = self.d;
        let mut s = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..=i {
                row += self.chol(theta, i, j) * (v[j] + theta[j]);
            }
            s += z[i] * row;
        }
        s
    }
}

impl Integrand for RcLogitMv {
    fn name(&self) -> String {
        format!("rc_logit_mv:{}", self.d)
    }
    fn dim_v(&self) -> usize {
        self.d
    }
    fn dim_theta(&self) -> usize {
        self.d + self.d * (self.d + 1) / 2
    }
    fn dim_z(&self) -> usize {
        self.d
    }
    fn theta_box(&self) -> &ThetaBox {
        &self.bounds
    }

    fn eval(&self, v: &[f64], z: &[f64], theta: &[f64]) -> f64 {
        logistic(self.index(v, z, theta))
    }

    fn eval_derivs(
        &self,
        v: &[f64],
        z: &[f64],
        theta: &[f64],
        grad: &mut [f64],
        hess: &mut [f64],
    ) -> Result<f64> {
        let d = self.d;
        let p = self.dim_theta();
        let g = logistic(self.index(v, z, theta));
        let d1 = g - g * g;
        let d2 = d1 * (1.0 - 2.0 * g);

        // s = zᵀC(v + μ): ∂s/∂μ_j = (Cᵀz)_j, ∂s/∂C_ij = z_i (v_j + μ_j)
        let mut ds = vec![0.0; p];
        for j in 0..d {
            ds[j] = (j..d).map(|i| z[i] * self.chol(theta, i, j)).sum();
        }
        for i in 0..d {
            for j in 0..=i {
                ds[d + vech_offset(i, j)] = z[i] * (v[j] + theta[j]);
            }
        }
        for a in 0..p {
            grad[a] = d1 * ds[a];
            for b in 0..p {
                hess[a * p + b] = d2 * ds[a] * ds[b];
            }
        }
        // s is bilinear: ∂²s/∂μ_j∂C_ij = z_i
        for i in 0..d {
            for j in 0..=i {
                let c = d + vech_offset(i, j);
                hess[j * p + c] += d1 * z[i];
                hess[c * p + j] += d1 * z[i];
            }
        }
        Ok(g)
    }
}

/// Random-effects panel probit, θ = (σ, β):
/// `φ = Π_t Φ(z_t β + σ v)`.
#[derive(Debug, Clone)]
pub struct ButlerMoffitt {
    periods: usize,
    bounds: ThetaBox,
}

pub fn butler_moffitt(periods: usize) -> Result<ButlerMoffitt> {
    if periods == 0 {
        return Err(Error::invalid("butler_moffitt needs T >= 1"));
    }
    Ok(ButlerMoffitt {
        periods,
        bounds: ThetaBox {
            lower: vec![0.0, -10.0],
            upper: vec![10.0, 10.0],
        },
    })
}

impl ButlerMoffitt {
    pub fn with_theta_box(mut self, bounds: ThetaBox) -> Result<Self> {
        if bounds.dim() != 2 {
            return Err(Error::config(
                "butler_moffitt theta box must have 2 coordinates",
            ));
        }
        self.bounds = bounds;
        Ok(self)
    }
}

impl Integrand for ButlerMoffitt {
    fn name(&self) -> String {
        format!("butler_moffitt:{}", self.periods)
    }
    fn dim_v(&self) -> usize {
        1
    }
    fn dim_theta(&self) -> usize {
        2
    }
    fn dim_z(&self) -> usize {
        self.periods
    }
    fn theta_box(&self) -> &ThetaBox {
        &self.bounds
    }

    fn eval(&self, v: &[f64], z: &[f64], theta: &[f64]) -> f64 {
        z.iter()
            .map(|&zt| normal_cdf(zt * theta[1] + theta[0] * v[0]))
            .product()
    }

    fn eval_derivs(
        &self,
        v: &[f64],
        z: &[f64],
        theta: &[f64],
        grad: &mut [f64],
        hess: &mut [f64],
    ) -> Result<f64> {
        let t_len = self.periods;
        let v = v[0];
        let a: Vec<f64> = z.iter().map(|&zt| zt * theta[1] + theta[0] * v).collect();
        let cdf: Vec<f64> = a.iter().map(|&x| normal_cdf(x)).collect();
        let pdf: Vec<f64> = a.iter().map(|&x| normal_pdf(x)).collect();
        let da = |t: usize| [v, z[t]];
        let prod_except = |skip: &[usize]| -> f64 {
            (0..t_len)
                .filter(|u| !skip.contains(u))
                .map(|u| cdf[u])
                .product()
        };
        grad[..2].fill(0.0);
        hess[..4].fill(0.0);
        for t in 0..t_len {
            let rest = prod_except(&[t]);
            let dt = da(t);
            // Φ'' = -a φ
            let second = -a[t] * pdf[t] * rest;
            for i in 0..2 {
                grad[i] += pdf[t] * rest * dt[i];
                for j in 0..2 {
                    hess[i * 2 + j] += second * dt[i] * dt[j];
                }
            }
            for s in 0..t_len {
                if s == t {
                    continue;
                }
                let ds = da(s);
                let cross = pdf[t] * pdf[s] * prod_except(&[t, s]);
                for i in 0..2 {
                    for j in 0..2 {
                        hess[i * 2 + j] += cross * dt[i] * ds[j];
                    }
                }
            }
        }
        Ok(cdf.iter().product())
    }
}

/// Random-coefficient regression, θ = β̄, z = (y, x):
/// `φ = g(y - x(β̄ + v))` with `g` the standard normal density.
#[derive(Debug, Clone)]
pub struct RcRegression {
    bounds: ThetaBox,
}

pub fn rc_regression() -> RcRegression {
    RcRegression {
        bounds: ThetaBox {
            lower: vec![-10.0],
            upper: vec![10.0],
        },
    }
}

impl Integrand for RcRegression {
    fn name(&self) -> String {
        "rc_regression".into()
    }
    fn dim_v(&self) -> usize {
        1
    }
    fn dim_theta(&self) -> usize {
        1
    }
    fn dim_z(&self) -> usize {
        2
    }
    fn theta_box(&self) -> &ThetaBox {
        &self.bounds
    }

    fn eval(&self, v: &[f64], z: &[f64], theta: &[f64]) -> f64 {
        normal_pdf(z[0] - z[1] * (theta[0] + v[0]))
    }

    fn eval_derivs(
        &self,
        v: &[f64],
        z: &[f64],
        theta: &[f64],
        grad: &mut [f64],
        hess: &mut [f64],
    ) -> Result<f64> {
        let x = z[1];
        let u = z[0] - x * (theta[0] + v[0]);
        let g = normal_pdf(u);
        grad[0] = u * x * g;
        hess[0] = x * x * g * (u * u - 1.0);
        Ok(g)
    }

    /// `y ~ N(x β̄, 1 + x²)` marginally.
    fn exact(&self, z: &[f64], theta: &[f64]) -> Option<f64> {
        let s = (1.0 + z[1] * z[1]).sqrt();
        Some(normal_pdf((z[0] - z[1] * theta[0]) / s) / s)
    }

    fn exact_derivs(
        &self,
        z: &[f64],
        theta: &[f64],
        grad: &mut [f64],
        hess: &mut [f64],
    ) -> Option<f64> {
        let (y, x) = (z[0], z[1]);
        let s2 = 1.0 + x * x;
        let s = s2.sqrt();
        let u = (y - x * theta[0]) / s;
        let g = normal_pdf(u);
        grad[0] = u * x * g / s2;
        hess[0] = x * x * g * (u * u - 1.0) / (s2 * s);
        Some(g / s)
    }
}

/// Accept-reject representation of the standard normal distribution
/// function: `φ(v, z) = 1(v <= z)`. Carries no parameters.
#[derive(Debug, Clone)]
pub struct ArsNormalCdf {
    bounds: ThetaBox,
}

pub fn ars_normal_cdf() -> ArsNormalCdf {
    ArsNormalCdf {
        bounds: ThetaBox::empty(),
    }
}

impl Integrand for ArsNormalCdf {
    fn name(&self) -> String {
        "ars".into()
    }
    fn dim_v(&self) -> usize {
        1
    }
    fn dim_theta(&self) -> usize {
        0
    }
    fn dim_z(&self) -> usize {
        1
    }
    fn theta_box(&self) -> &ThetaBox {
        &self.bounds
    }
    fn has_derivatives(&self) -> bool {
        false
    }

    fn eval(&self, v: &[f64], z: &[f64], _theta: &[f64]) -> f64 {
        if v[0] <= z[0] {
            1.0
        } else {
            0.0
        }
    }

    fn eval_derivs(
        &self,
        _v: &[f64],
        _z: &[f64],
        _theta: &[f64],
        _grad: &mut [f64],
        _hess: &mut [f64],
    ) -> Result<f64> {
        Err(Error::UnsupportedOperation(
            "the indicator integrand has no parameter derivatives".into(),
        ))
    }

    fn exact(&self, z: &[f64], _theta: &[f64]) -> Option<f64> {
        Some(0.5 * (1.0 + libm::erf(z[0] * std::f64::consts::FRAC_1_SQRT_2)))
    }
}

/// Model selector used by configs and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelId {
    RcRegression,
    MixedLogit1d,
    RcLogitMv(usize),
    ButlerMoffitt(usize),
    Ars,
}

impl ModelId {
    pub fn build(&self) -> Result<Box<dyn Integrand>> {
        Ok(match *self {
            ModelId::RcRegression => Box::new(rc_regression()),
            ModelId::MixedLogit1d => Box::new(mixed_logit_1d()),
            ModelId::RcLogitMv(d) => Box::new(rc_logit_mv(d)?),
            ModelId::ButlerMoffitt(t) => Box::new(butler_moffitt(t)?),
            ModelId::Ars => Box::new(ars_normal_cdf()),
        })
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let count = |default: usize| -> Result<usize> {
            arg.map_or(Ok(default), |a| {
                a.parse()
                    .map_err(|_| Error::invalid(format!("bad model argument in '{s}'")))
            })
        };
        match head {
            "rc_regression" => Ok(ModelId::RcRegression),
            "mixed_logit_1d" => Ok(ModelId::MixedLogit1d),
            "rc_logit_mv" => Ok(ModelId::RcLogitMv(count(2)?)),
            "butler_moffitt" => Ok(ModelId::ButlerMoffitt(count(2)?)),
            "ars" | "ars_normal_cdf" => Ok(ModelId::Ars),
            _ => Err(Error::invalid(format!("unknown model '{s}'"))),
        }
    }
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelId::RcRegression => write!(f, "rc_regression"),
            ModelId::MixedLogit1d => write!(f, "mixed_logit_1d"),
            ModelId::RcLogitMv(d) => write!(f, "rc_logit_mv:{d}"),
            ModelId::ButlerMoffitt(t) => write!(f, "butler_moffitt:{t}"),
            ModelId::Ars => write!(f, "ars"),
        }
    }
}

impl TryFrom<String> for ModelId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelId> for String {
    fn from(m: ModelId) -> String {
        m.to_string()
    }
}
