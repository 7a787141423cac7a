//! Error functionals of approximated likelihood contributions, rate fits,
//! scaled-error series for link functions, and numerical checks of the
//! log-composition bounds and analytic derivatives.

use rand::distr::{Distribution, Uniform};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::link::LinkFunction;
use crate::method::Method;
use crate::models::{generate_dataset, Dgp, Integrand};
use crate::rng::{self, streams};
use crate::{Error, Result, RuleND};

/// One `(z, θ)` at which errors are measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub probes: Vec<Probe>,
    pub description: String,
}

impl ProbeSet {
    pub fn new(probes: Vec<Probe>, description: impl Into<String>) -> Self {
        Self {
            probes,
            description: description.into(),
        }
    }

    /// `n_z` records drawn from `dgp` crossed with a `theta_per_axis` grid
    /// over `theta_box`.
    pub fn from_dgp(
        integrand: &dyn Integrand,
        dgp: Dgp,
        true_theta: &[f64],
        n_z: usize,
        theta_per_axis: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::from_dgp_on_box(
            integrand,
            dgp,
            true_theta,
            n_z,
            theta_per_axis,
            &integrand.theta_box().clone(),
            seed,
        )
    }

    pub fn from_dgp_on_box(
        integrand: &dyn Integrand,
        dgp: Dgp,
        true_theta: &[f64],
        n_z: usize,
        theta_per_axis: usize,
        theta_box: &crate::models::ThetaBox,
        seed: u64,
    ) -> Result<Self> {
        let data = generate_dataset(dgp, n_z, rng::derive(seed, streams::PROBES), true_theta)?;
        if data.dim_z() != integrand.dim_z() {
            return Err(Error::config("probe records do not match the integrand"));
        }
        let thetas = theta_box.grid(theta_per_axis);
        let mut probes = Vec::with_capacity(n_z * thetas.len());
        for z in data.records() {
            for theta in &thetas {
                probes.push(Probe {
                    z: z.to_vec(),
                    theta: theta.clone(),
                });
            }
        }
        Ok(Self::new(
            probes,
            format!(
                "{n_z} z-draws from {dgp} (true θ {true_theta:?}, seed {seed}) × {}-point θ grid on {:?}..{:?}",
                thetas.len(),
                theta_box.lower,
                theta_box.upper
            ),
        ))
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }
}

/// What the approximations are compared against.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    /// The integrand's closed form.
    Exact,
    /// A fine rule, e.g. Gauss-Hermite with 100 nodes, built by `method`
    /// with size argument `r`.
    Rule {
        rule: &'a RuleND,
        method: Method,
        r: usize,
    },
}

impl Reference<'_> {
    pub fn describe(&self) -> String {
        match self {
            Reference::Exact => "closed form".into(),
            Reference::Rule { rule, method, r } => {
                format!("{method}:{r} ({} points)", rule.r())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveOptions {
    /// Highest θ-derivative order compared (0, 1 or 2).
    pub k: usize,
    /// Repetitions for stochastic methods (deterministic methods use one).
    pub reps: usize,
    pub base_seed: u64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            k: 0,
            reps: 1,
            base_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub method: String,
    pub r_values: Vec<usize>,
    /// Worst case over the probe set (averaged over repetitions).
    pub sup_error: Vec<f64>,
    /// Root mean square over probes and repetitions.
    pub rmse: Vec<f64>,
    pub probe_spec: String,
    pub reference: String,
    pub k: usize,
}

/// Value and derivatives of a contribution at one probe.
#[derive(Debug, Clone, Default)]
struct Jet {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl Jet {
    fn max_abs_diff(&self, other: &Jet, k: usize) -> f64 {
        let mut e = (self.value - other.value).abs();
        if k >= 1 {
            for (a, b) in self.grad.iter().zip(&other.grad) {
                e = e.max((a - b).abs());
            }
        }
        if k >= 2 {
            for (a, b) in self.hess.iter().zip(&other.hess) {
                e = e.max((a - b).abs());
            }
        }
        e
    }
}

fn rule_jet(integrand: &dyn Integrand, rule: &RuleND, probe: &Probe, k: usize) -> Result<Jet> {
    if k == 0 {
        let value = rule.apply(|v| integrand.eval(v, &probe.z, &probe.theta))?;
        return Ok(Jet {
            value,
            ..Jet::default()
        });
    }
    let p = integrand.dim_theta();
    let mut g = vec![0.0; p];
    let mut h = vec![0.0; p * p];
    let mut jet = Jet {
        value: 0.0,
        grad: vec![0.0; p],
        hess: vec![0.0; p * p],
    };
    for (v, &w) in rule.points().zip(rule.weights()) {
        let phi = integrand.eval_derivs(v, &probe.z, &probe.theta, &mut g, &mut h)?;
        jet.value += w * phi;
        for (a, b) in jet.grad.iter_mut().zip(&g) {
            *a += w * b;
        }
        for (a, b) in jet.hess.iter_mut().zip(&h) {
            *a += w * b;
        }
    }
    Ok(jet)
}

fn exact_jet(integrand: &dyn Integrand, probe: &Probe, k: usize) -> Result<Jet> {
    let missing = || Error::config(format!("{} has no closed form reference", integrand.name()));
    if k == 0 {
        let value = integrand
            .exact(&probe.z, &probe.theta)
            .ok_or_else(missing)?;
        return Ok(Jet {
            value,
            ..Jet::default()
        });
    }
    let p = integrand.dim_theta();
    let mut jet = Jet {
        value: 0.0,
        grad: vec![0.0; p],
        hess: vec![0.0; p * p],
    };
    jet.value = integrand
        .exact_derivs(&probe.z, &probe.theta, &mut jet.grad, &mut jet.hess)
        .ok_or_else(missing)?;
    Ok(jet)
}

/// Sup and RMS error of one rule over a probe set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeErrors {
    pub sup: f64,
    pub rms: f64,
}

/// Reference values (and derivatives up to order `k`) at every probe.
#[derive(Debug, Clone)]
pub struct ReferenceValues {
    jets: Vec<Jet>,
    k: usize,
}

impl ReferenceValues {
    pub fn compute(
        integrand: &dyn Integrand,
        probes: &ProbeSet,
        reference: Reference<'_>,
        k: usize,
    ) -> Result<Self> {
        let jets = probes
            .probes
            .iter()
            .map(|probe| match reference {
                Reference::Exact => exact_jet(integrand, probe, k),
                Reference::Rule { rule, .. } => rule_jet(integrand, rule, probe, k),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { jets, k })
    }

    /// Errors of `rule` against the stored values; `probes` must be the set
    /// the values were computed on.
    pub fn errors(
        &self,
        integrand: &dyn Integrand,
        rule: &RuleND,
        probes: &ProbeSet,
    ) -> Result<ProbeErrors> {
        if probes.len() != self.jets.len() {
            return Err(Error::invalid(
                "probe set does not match the reference values",
            ));
        }
        let mut sup: f64 = 0.0;
        let mut sq = 0.0;
        for (probe, reference) in probes.probes.iter().zip(&self.jets) {
            let e = rule_jet(integrand, rule, probe, self.k)?.max_abs_diff(reference, self.k);
            sup = sup.max(e);
            sq += e * e;
        }
        Ok(ProbeErrors {
            sup,
            rms: (sq / probes.len() as f64).sqrt(),
        })
    }
}

/// A reference of the same family as the tested rule must not be coarser
/// than it. Sizes of different families are not comparable.
pub fn check_reference(
    integrand: &dyn Integrand,
    method: Method,
    max_r: usize,
    reference: Reference<'_>,
) -> Result<()> {
    if let Reference::Rule {
        rule,
        method: ref_method,
        r,
    } = reference
    {
        if rule.d() != integrand.dim_v() {
            return Err(Error::config(
                "reference rule dimension does not match the integrand",
            ));
        }
        if ref_method == method && r < max_r {
            return Err(Error::config(format!(
                "reference {ref_method}:{r} is coarser than the tested {method}:{max_r}"
            )));
        }
    }
    Ok(())
}

/// Seed for the rule of size `r` in repetition `rep`.
pub fn rule_seed(base_seed: u64, rep: usize, r: usize) -> u64 {
    rng::derive(rng::rep_seed(base_seed, rep as u64), r as u64)
}

/// Sup and RMS error of `method` over `probes` for each `r`, measured on
/// θ-derivatives up to order `opts.k`.
pub fn error_curve(
    integrand: &dyn Integrand,
    method: Method,
    r_values: &[usize],
    probes: &ProbeSet,
    reference: Reference<'_>,
    opts: &CurveOptions,
) -> Result<ErrorReport> {
    if r_values.is_empty() || r_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "r values must be non-empty and strictly increasing",
        ));
    }
    if probes.is_empty() {
        return Err(Error::invalid("probe set is empty"));
    }
    if opts.k > 2 {
        return Err(Error::invalid("derivative order k must be at most 2"));
    }
    if opts.k > 0 && !integrand.has_derivatives() {
        return Err(Error::UnsupportedOperation(format!(
            "{} has no parameter derivatives",
            integrand.name()
        )));
    }
    let max_r = *r_values.last().expect("non-empty");
    check_reference(integrand, method, max_r, reference)?;
    let refs = ReferenceValues::compute(integrand, probes, reference, opts.k)?;
    let reps = if method.is_stochastic() {
        opts.reps.max(1)
    } else {
        1
    };
    let mut sup_error = Vec::with_capacity(r_values.len());
    let mut rmse = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let mut sup_acc = 0.0;
        let mut sq_acc = 0.0;
        for rep in 0..reps {
            let rule = method.build(r, integrand.dim_v(), rule_seed(opts.base_seed, rep, r))?;
            let e = refs.errors(integrand, &rule, probes)?;
            sup_acc += e.sup;
            sq_acc += e.rms * e.rms;
        }
        sup_error.push(sup_acc / reps as f64);
        rmse.push((sq_acc / reps as f64).sqrt());
    }
    Ok(ErrorReport {
        method: method.label().into(),
        r_values: r_values.to_vec(),
        sup_error,
        rmse,
        probe_spec: probes.description.clone(),
        reference: reference.describe(),
        k: opts.k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RateModel {
    /// `E ≈ c r^{-s}`.
    Algebraic { c: f64, s: f64 },
    /// `E ≈ c exp(-α r^β)`.
    Exponential { c: f64, alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    pub r_squared: f64,
}

impl RateFit {
    /// Slope of `log E` against `log r` for algebraic fits.
    pub fn algebraic_slope(&self) -> Option<f64> {
        match self.model {
            RateModel::Algebraic { s, .. } => Some(-s),
            RateModel::Exponential { .. } => None,
        }
    }
}

const DEGENERATE_ERROR: f64 = 1e-14;
const EXPONENTIAL_BETAS: [f64; 2] = [0.5, 1.0];

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b, r²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (intercept, slope, r2)
}

/// Slope of `log e` against `log r` (the algebraic fit only).
pub fn log_log_slope(r_values: &[usize], errors: &[f64]) -> f64 {
    let x: Vec<f64> = r_values.iter().map(|&r| (r as f64).ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    linear_fit(&x, &y).1
}

/// Fits algebraic and exponential decay to `(r, E)` pairs and keeps the one
/// with the larger r². Errors below `1e-14` are treated as round-off and
/// dropped; fewer than four remaining points is a degenerate fit.
pub fn fit_rate_series(r_values: &[usize], errors: &[f64]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = r_values
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e >= DEGENERATE_ERROR && e.is_finite())
        .map(|(&r, &e)| (r as f64, e.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "{} of {} errors at or above {DEGENERATE_ERROR:e}; need 4",
            pts.len(),
            errors.len()
        )));
    }
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let log_r: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let (a, b, r2) = linear_fit(&log_r, &y);
    let mut best = RateFit {
        model: RateModel::Algebraic { c: a.exp(), s: -b },
        r_squared: r2,
    };
    for beta in EXPONENTIAL_BETAS {
        let x: Vec<f64> = pts.iter().map(|p| p.0.powf(beta)).collect();
        let (a, b, r2) = linear_fit(&x, &y);
        if r2 > best.r_squared + 1e-12 {
            best = RateFit {
                model: RateModel::Exponential {
                    c: a.exp(),
                    alpha: -b,
                    beta,
                },
                r_squared: r2,
            };
        }
    }
    Ok(best)
}

pub fn fit_rate(report: &ErrorReport) -> Result<RateFit> {
    fit_rate_series(&report.r_values, &report.sup_error)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledErrorPoint {
    pub n: u64,
    pub r: usize,
    pub error: f64,
    /// `√n · E(R(n))`.
    pub scaled: f64,
}

/// `√n · E(R(n))` along `n_values`, with `E` the sup error over value and
/// first θ-derivatives.
pub fn scaled_error_series(
    integrand: &dyn Integrand,
    method: Method,
    link: &LinkFunction,
    n_values: &[u64],
    probes: &ProbeSet,
    reference: Reference<'_>,
    reps: usize,
    base_seed: u64,
) -> Result<Vec<ScaledErrorPoint>> {
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n values must be strictly increasing"));
    }
    let opts = CurveOptions {
        k: 1,
        reps,
        base_seed,
    };
    n_values
        .iter()
        .map(|&n| {
            let r = link.evaluate(n)? as usize;
            let report = error_curve(integrand, method, &[r], probes, reference, &opts)?;
            let error = report.sup_error[0];
            Ok(ScaledErrorPoint {
                n,
                r,
                error,
                scaled: (n as f64).sqrt() * error,
            })
        })
        .collect()
}

/// A function sampled on a probe grid, optionally with derivatives.
#[derive(Debug, Clone, Default)]
pub struct FunctionSamples {
    pub values: Vec<f64>,
    /// One gradient per probe, or empty.
    pub grads: Vec<Vec<f64>>,
    /// One row-major Hessian per probe, or empty.
    pub hessians: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            slack: rhs - lhs,
            holds: lhs <= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionReport {
    pub value_bound: BoundCheck,
    pub gradient_bound: Option<BoundCheck>,
    pub hessian_bound: Option<BoundCheck>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

impl CompositionReport {
    pub fn violations(&self) -> usize {
        [
            Some(&self.value_bound),
            self.gradient_bound.as_ref(),
            self.hessian_bound.as_ref(),
        ]
        .into_iter()
        .flatten()
        .filter(|b| !b.holds)
        .count()
    }

    /// Smallest `rhs - lhs` over the checked bounds.
    pub fn min_slack(&self) -> f64 {
        [
            Some(&self.value_bound),
            self.gradient_bound.as_ref(),
            self.hessian_bound.as_ref(),
        ]
        .into_iter()
        .flatten()
        .map(|b| b.slack)
        .fold(f64::INFINITY, f64::min)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn sup<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

/// Checks, on a probe grid, the sup-norm bounds for `log g - log h` and its
/// first two derivatives in terms of `g - h`:
///
/// * `sup|log g - log h| <= sup|g - h| / δ`
/// * gradient difference `<= C₁ (sup|g - h| + sup‖∇g - ∇h‖)`,
///   `C₁ = (1 + sup‖∇h‖) / δ²`
/// * Hessian difference `<= C₂ (sup|g - h| + sup‖∇g - ∇h‖ + sup‖∇g - ∇h‖² + sup‖∇²g - ∇²h‖)`,
///   `C₂ = 4 (1 + sup‖∇h‖² + sup‖∇²h‖) / δ³`
///
/// Vector norms are Euclidean and matrix norms Frobenius. The derivative
/// bounds are checked only when both samples carry derivatives.
pub fn check_log_composition_bounds(
    g: &FunctionSamples,
    h: &FunctionSamples,
    delta: f64,
) -> Result<CompositionReport> {
    if g.values.len() != h.values.len() || g.values.is_empty() {
        return Err(Error::invalid(
            "g and h must be sampled on the same non-empty grid",
        ));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("floor delta must be positive"));
    }
    if let Some(bad) = g.values.iter().chain(&h.values).find(|&&x| !(x >= delta)) {
        return Err(Error::PreconditionFailure(format!(
            "sample value {bad} below the floor {delta}"
        )));
    }
    let d0 = sup(g.values.iter().zip(&h.values).map(|(a, b)| (a - b).abs()));
    let lhs0 = sup(g
        .values
        .iter()
        .zip(&h.values)
        .map(|(a, b)| (a.ln() - b.ln()).abs()));
    let value_bound = BoundCheck::new(lhs0, d0 / delta);

    let with_grads = !g.grads.is_empty() && !h.grads.is_empty();
    if !with_grads {
        return Ok(CompositionReport {
            value_bound,
            gradient_bound: None,
            hessian_bound: None,
            c1: None,
            c2: None,
        });
    }
    let m = g.values.len();
    if g.grads.len() != m || h.grads.len() != m {
        return Err(Error::invalid("gradients must be given at every probe"));
    }
    let d1 = sup((0..m).map(|i| diff_norm(&g.grads[i], &h.grads[i])));
    let grad_h = sup(h.grads.iter().map(|x| norm(x)));
    let lhs1 = sup((0..m).map(|i| {
        let lg: Vec<f64> = g.grads[i].iter().map(|x| x / g.values[i]).collect();
        let lh: Vec<f64> = h.grads[i].iter().map(|x| x / h.values[i]).collect();
        diff_norm(&lg, &lh)
    }));
    let c1 = (1.0 + grad_h) / (delta * delta);
    let gradient_bound = Some(BoundCheck::new(lhs1, c1 * (d0 + d1)));

    let with_hess = !g.hessians.is_empty() && !h.hessians.is_empty();
    let (hessian_bound, c2) = if with_hess {
        if g.hessians.len() != m || h.hessians.len() != m {
            return Err(Error::invalid("Hessians must be given at every probe"));
        }
        let p = g.grads[0].len();
        let d2 = sup((0..m).map(|i| diff_norm(&g.hessians[i], &h.hessians[i])));
        let hess_h = sup(h.hessians.iter().map(|x| norm(x)));
        let log_hess = |s: &FunctionSamples, i: usize| -> Vec<f64> {
            let f = s.values[i];
            let gr = &s.grads[i];
            (0..p * p)
                .map(|k| s.hessians[i][k] / f - gr[k / p] * gr[k % p] / (f * f))
                .collect()
        };
        let lhs2 = sup((0..m).map(|i| diff_norm(&log_hess(g, i), &log_hess(h, i))));
        let c2 = 4.0 * (1.0 + grad_h * grad_h + hess_h) / delta.powi(3);
        (
            Some(BoundCheck::new(lhs2, c2 * (d0 + d1 + d1 * d1 + d2))),
            Some(c2),
        )
    } else {
        (None, None)
    };
    Ok(CompositionReport {
        value_bound,
        gradient_bound,
        hessian_bound,
        c1: Some(c1),
        c2,
    })
}

/// Samples `f̃ = rule(φ)` with its θ-derivatives at each probe.
pub fn sample_contribution(
    integrand: &dyn Integrand,
    rule: &RuleND,
    probes: &ProbeSet,
) -> Result<FunctionSamples> {
    let mut out = FunctionSamples::default();
    for probe in &probes.probes {
        let jet = rule_jet(integrand, rule, probe, 2)?;
        out.values.push(jet.value);
        out.grads.push(jet.grad);
        out.hessians.push(jet.hess);
    }
    Ok(out)
}

/// A point `(v, z, θ)` for derivative checks.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
}

/// `count` points with `v, z ~ N(0, 1)` and θ uniform on `theta_box`.
pub fn random_eval_points(integrand: &dyn Integrand, count: usize, seed: u64) -> Vec<EvalPoint> {
    let mut rng = rng::stream(seed, streams::PROBES);
    let bounds = integrand.theta_box();
    (0..count)
        .map(|_| {
            let v = (0..integrand.dim_v())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let z = (0..integrand.dim_z())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let theta = bounds
                .lower
                .iter()
                .zip(&bounds.upper)
                .map(|(&l, &u)| {
                    if l == u {
                        l
                    } else {
                        Uniform::new_inclusive(l, u)
                            .expect("ordered bounds")
                            .sample(&mut rng)
                    }
                })
                .collect();
            EvalPoint { v, z, theta }
        })
        .collect()
}

pub const FD_GRAD_STEP: f64 = 1e-5;
pub const FD_HESS_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdReport {
    /// Max relative deviation of the analytic gradient.
    pub grad_deviation: f64,
    /// Max relative deviation of the analytic Hessian.
    pub hess_deviation: f64,
    /// Max asymmetry `|H_ij - H_ji|` of the analytic Hessian.
    pub hess_asymmetry: f64,
}

/// Deviation `|a - b| / max(1, |b|)` with a unit floor, as the integrands are
/// probabilities and densities of order one.
fn rel_dev(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / numeric.abs().max(1.0)
}

/// Compares analytic θ-derivatives with central differences: of φ for the
/// gradient (step `1e-5`) and of the analytic gradient for the Hessian
/// (step `1e-4`).
pub fn fd_check(integrand: &dyn Integrand, points: &[EvalPoint]) -> Result<FdReport> {
    let p = integrand.dim_theta();
    let mut grad = vec![0.0; p];
    let mut hess = vec![0.0; p * p];
    let mut gp = vec![0.0; p];
    let mut gm = vec![0.0; p];
    let mut scratch = vec![0.0; p * p];
    let mut report = FdReport {
        grad_deviation: 0.0,
        hess_deviation: 0.0,
        hess_asymmetry: 0.0,
    };
    for pt in points {
        integrand.eval_derivs(&pt.v, &pt.z, &pt.theta, &mut grad, &mut hess)?;
        let mut theta = pt.theta.clone();
        for a in 0..p {
            let t0 = theta[a];
            theta[a] = t0 + FD_GRAD_STEP;
            let fp = integrand.eval(&pt.v, &pt.z, &theta);
            theta[a] = t0 - FD_GRAD_STEP;
            let fm = integrand.eval(&pt.v, &pt.z, &theta);
            let fd = (fp - fm) / (2.0 * FD_GRAD_STEP);
            report.grad_deviation = report.grad_deviation.max(rel_dev(grad[a], fd));

            theta[a] = t0 + FD_HESS_STEP;
            integrand.eval_derivs(&pt.v, &pt.z, &theta, &mut gp, &mut scratch)?;
            theta[a] = t0 - FD_HESS_STEP;
            integrand.eval_derivs(&pt.v, &pt.z, &theta, &mut gm, &mut scratch)?;
            theta[a] = t0;
            for b in 0..p {
                let fd = (gp[b] - gm[b]) / (2.0 * FD_HESS_STEP);
                report.hess_deviation = report.hess_deviation.max(rel_dev(hess[b * p + a], fd));
                report.hess_asymmetry = report
                    .hess_asymmetry
                    .max((hess[a * p + b] - hess[b * p + a]).abs());
            }
        }
    }
    Ok(report)
}
