//! Simulation studies driven by a JSON config: convergence of the
//! approximated contribution for a smooth and a non-smooth integrand, the
//! scaled error `√n·E(R(n))` under link functions, and the RMSE of the
//! estimator at fixed sample size.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{check_reference, rule_seed, ProbeSet, Reference, ReferenceValues};
use crate::estimator::{maximize, MalProblem, MaximizeOptions};
use crate::link::LinkFunction;
use crate::method::Method;
use crate::models::{generate_dataset, Dgp, Integrand, ModelId};
use crate::rng::{self, streams};
use crate::{Error, Result, RuleND};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SmoothConvergence,
    ArsConvergence,
    LinkScaling,
    RmseFixedN,
}

impl ExperimentKind {
    /// Repetitions used when the config leaves `reps` unset.
    pub fn default_reps(&self) -> usize {
        match self {
            ExperimentKind::RmseFixedN => 2000,
            _ => 5000,
        }
    }
}

fn default_reference_r() -> usize {
    100
}
fn default_theta() -> Vec<f64> {
    vec![0.0]
}
fn default_probe_z() -> usize {
    200
}
fn default_probe_theta() -> usize {
    9
}
fn default_max_non_converged() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelId,
    pub methods: Vec<Method>,
    /// Rule sizes shared by all methods.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub r_values: Vec<usize>,
    /// Per-method replacement for `r_values`, keyed by method label.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub r_values_by_method: BTreeMap<String, Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkFunction>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_values: Vec<u64>,
    /// Repetitions; unset means the full-scale default of the experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Size of the Gauss-Hermite reference rule.
    #[serde(default = "default_reference_r")]
    pub reference_r: usize,
    /// True parameter of the data generating process, also the point at
    /// which contributions are compared in the convergence studies.
    #[serde(default = "default_theta")]
    pub theta: Vec<f64>,
    /// Records drawn for the probe set of the link study.
    #[serde(default = "default_probe_z")]
    pub probe_z: usize,
    /// Grid points per θ-axis of the probe set.
    #[serde(default = "default_probe_theta")]
    pub probe_theta: usize,
    /// Largest tolerated share of non-converged fits per cell.
    #[serde(default = "default_max_non_converged")]
    pub max_non_converged: f64,
}

impl ExperimentConfig {
    fn base(experiment: ExperimentKind, model: ModelId, methods: Vec<Method>) -> Self {
        Self {
            experiment,
            model,
            methods,
            r_values: Vec::new(),
            r_values_by_method: BTreeMap::new(),
            links: Vec::new(),
            n_values: Vec::new(),
            reps: None,
            base_seed: 20240101,
            output: None,
            reference_r: default_reference_r(),
            theta: default_theta(),
            probe_z: default_probe_z(),
            probe_theta: default_probe_theta(),
            max_non_converged: default_max_non_converged(),
        }
    }

    /// Smooth random-coefficient regression, r = 2, 4, …, 16384.
    pub fn smooth_convergence() -> Self {
        let mut cfg = Self::base(
            ExperimentKind::SmoothConvergence,
            ModelId::RcRegression,
            vec![Method::Mc, Method::Halton, Method::Gh],
        );
        cfg.r_values = powers_of_two(1, 14);
        cfg.r_values_by_method
            .insert(Method::Gh.label().into(), powers_of_two(1, 6));
        cfg
    }

    /// Indicator integrand, r = 16, …, 16384.
    pub fn ars_convergence() -> Self {
        let mut cfg = Self::base(
            ExperimentKind::ArsConvergence,
            ModelId::Ars,
            vec![Method::Mc, Method::Halton, Method::Gl, Method::Gh],
        );
        cfg.r_values = powers_of_two(4, 14);
        cfg.theta = Vec::new();
        cfg
    }

    /// Constant, logarithmic, square-root and linear links over n = 10 … 10⁵.
    pub fn link_scaling() -> Self {
        let mut cfg = Self::base(
            ExperimentKind::LinkScaling,
            ModelId::RcRegression,
            vec![Method::Mc, Method::Halton, Method::Gh],
        );
        cfg.links = vec![
            LinkFunction::Constant { r0: 8 },
            LinkFunction::Logarithmic { a: 6.0 },
            LinkFunction::Sqrt { a: 1.0 },
            LinkFunction::Linear { a: 0.1 },
        ];
        cfg.n_values = vec![10, 100, 1_000, 10_000, 100_000];
        cfg.reps = Some(20);
        cfg
    }

    /// Estimator RMSE at n = 50 and n = 5000.
    pub fn rmse_fixed_n() -> Self {
        let mut cfg = Self::base(
            ExperimentKind::RmseFixedN,
            ModelId::RcRegression,
            vec![Method::Mc, Method::Halton, Method::Gh],
        );
        cfg.r_values = powers_of_two(1, 7);
        cfg.n_values = vec![50, 5000];
        cfg
    }

    pub fn preset(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::SmoothConvergence => Self::smooth_convergence(),
            ExperimentKind::ArsConvergence => Self::ars_convergence(),
            ExperimentKind::LinkScaling => Self::link_scaling(),
            ExperimentKind::RmseFixedN => Self::rmse_fixed_n(),
        }
    }

    pub fn reps(&self) -> usize {
        self.reps.unwrap_or_else(|| self.experiment.default_reps())
    }

    /// Rule sizes for `method`.
    pub fn r_grid(&self, method: Method) -> &[usize] {
        self.r_values_by_method
            .get(method.label())
            .map_or(&self.r_values[..], Vec::as_slice)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == Some(0) {
            return Err(Error::config("reps must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("no methods given"));
        }
        for key in self.r_values_by_method.keys() {
            let m: Method = key.parse()?;
            if !self.methods.contains(&m) {
                return Err(Error::config(format!(
                    "r grid given for unused method '{key}'"
                )));
            }
        }
        let increasing = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&self.r_values) || !self.r_values_by_method.values().all(|v| increasing(v)) {
            return Err(Error::config("r grid must be strictly increasing"));
        }
        if self.r_values.contains(&0) || self.r_values_by_method.values().any(|v| v.contains(&0)) {
            return Err(Error::config("r values must be positive"));
        }
        if !self.n_values.windows(2).all(|w| w[0] < w[1]) || self.n_values.contains(&0) {
            return Err(Error::config(
                "n values must be positive and strictly increasing",
            ));
        }
        for link in &self.links {
            link.validate()?;
        }
        if !(0.0..=1.0).contains(&self.max_non_converged) {
            return Err(Error::config("max_non_converged must lie in [0, 1]"));
        }
        let allowed = [
            Method::Mc,
            Method::Halton,
            Method::Mlhs,
            Method::Gh,
            Method::Gl,
            Method::Midpoint,
        ];
        if let Some(m) = self.methods.iter().find(|m| !allowed.contains(m)) {
            return Err(Error::config(format!(
                "method '{m}' is not supported by the experiments"
            )));
        }
        let needs = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("{:?} needs {what}", self.experiment)))
            }
        };
        match self.experiment {
            ExperimentKind::SmoothConvergence => {
                needs(self.model == ModelId::RcRegression, "model rc_regression")?;
                needs(
                    self.methods.iter().all(|&m| !self.r_grid(m).is_empty()),
                    "an r grid",
                )?;
                needs(self.theta.len() == 1, "a one-element theta")?;
            }
            ExperimentKind::ArsConvergence => {
                needs(self.model == ModelId::Ars, "model ars")?;
                needs(
                    self.methods.iter().all(|&m| !self.r_grid(m).is_empty()),
                    "an r grid",
                )?;
                needs(self.theta.is_empty(), "an empty theta")?;
            }
            ExperimentKind::LinkScaling => {
                needs(self.model == ModelId::RcRegression, "model rc_regression")?;
                needs(!self.links.is_empty(), "links")?;
                needs(!self.n_values.is_empty(), "n values")?;
                needs(self.theta.len() == 1, "a one-element theta")?;
            }
            ExperimentKind::RmseFixedN => {
                needs(self.model == ModelId::RcRegression, "model rc_regression")?;
                needs(
                    self.methods.iter().all(|&m| !self.r_grid(m).is_empty()),
                    "an r grid",
                )?;
                needs(!self.n_values.is_empty(), "n values")?;
                needs(self.theta.len() == 1, "a one-element theta")?;
            }
        }
        Ok(())
    }
}

fn powers_of_two(from: u32, to: u32) -> Vec<usize> {
    (from..=to).map(|k| 1usize << k).collect()
}

/// One approximation error of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub model: String,
    pub method: String,
    pub r: usize,
    pub rep: usize,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceAggregate {
    pub model: String,
    pub method: String,
    pub r: usize,
    pub max_abs_error: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub model: String,
    pub link: String,
    pub method: String,
    pub n: u64,
    pub r: usize,
    pub rep: usize,
    /// Sup error over the probe set, value and gradient.
    pub error: f64,
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkAggregate {
    pub model: String,
    pub link: String,
    pub method: String,
    pub n: u64,
    pub r: usize,
    /// Sup error averaged over repetitions.
    pub error: f64,
    /// `√n` times `error`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub model: String,
    pub method: String,
    pub n: u64,
    pub r: usize,
    pub rep: usize,
    pub theta_hat: f64,
    pub converged: bool,
    pub iterations: usize,
    pub floor_activations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitAggregate {
    pub model: String,
    pub method: String,
    pub n: u64,
    pub r: usize,
    /// Over converged fits only.
    pub rmse: f64,
    /// RMSE of the reference-rule fits at the same `n`.
    pub floor: f64,
    pub converged: usize,
    pub non_converged: usize,
}

/// Label of the reference-rule fits in the RMSE study.
pub const REFERENCE_LABEL: &str = "reference";

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentResults {
    Convergence {
        rows: Vec<ConvergenceRow>,
        aggregate: Vec<ConvergenceAggregate>,
    },
    Link {
        rows: Vec<LinkRow>,
        aggregate: Vec<LinkAggregate>,
    },
    Fit {
        rows: Vec<FitRow>,
        aggregate: Vec<FitAggregate>,
    },
}

fn write_rows<R: Serialize>(path: &Path, rows: &[R], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(File::create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

const CONVERGENCE_HEADER: [&str; 5] = ["model", "method", "r", "rep", "abs_error"];
const CONVERGENCE_AGG_HEADER: [&str; 5] = ["model", "method", "r", "max_abs_error", "rmse"];
const LINK_HEADER: [&str; 8] = [
    "model", "link", "method", "n", "r", "rep", "error", "scaled",
];
const LINK_AGG_HEADER: [&str; 7] = ["model", "link", "method", "n", "r", "error", "scaled"];
const FIT_HEADER: [&str; 9] = [
    "model",
    "method",
    "n",
    "r",
    "rep",
    "theta_hat",
    "converged",
    "iterations",
    "floor_activations",
];
const FIT_AGG_HEADER: [&str; 8] = [
    "model",
    "method",
    "n",
    "r",
    "rmse",
    "floor",
    "converged",
    "non_converged",
];

impl ExperimentResults {
    /// Writes per-repetition rows to `results` and aggregates to `aggregate`.
    /// Headers are written even when there are no rows.
    pub fn write_csv(&self, results: &Path, aggregate: &Path) -> Result<()> {
        match self {
            ExperimentResults::Convergence {
                rows,
                aggregate: agg,
            } => {
                write_rows(results, rows, &CONVERGENCE_HEADER)?;
                write_rows(aggregate, agg, &CONVERGENCE_AGG_HEADER)
            }
            ExperimentResults::Link {
                rows,
                aggregate: agg,
            } => {
                write_rows(results, rows, &LINK_HEADER)?;
                write_rows(aggregate, agg, &LINK_AGG_HEADER)
            }
            ExperimentResults::Fit {
                rows,
                aggregate: agg,
            } => {
                write_rows(results, rows, &FIT_HEADER)?;
                write_rows(aggregate, agg, &FIT_AGG_HEADER)
            }
        }
    }

    pub fn row_count(&self) -> usize {
        match self {
            ExperimentResults::Convergence { rows, .. } => rows.len(),
            ExperimentResults::Link { rows, .. } => rows.len(),
            ExperimentResults::Fit { rows, .. } => rows.len(),
        }
    }

    pub fn aggregate_count(&self) -> usize {
        match self {
            ExperimentResults::Convergence { aggregate, .. } => aggregate.len(),
            ExperimentResults::Link { aggregate, .. } => aggregate.len(),
            ExperimentResults::Fit { aggregate, .. } => aggregate.len(),
        }
    }
}

/// Rules for one method across repetitions: deterministic rules are built
/// once per size and shared.
struct RuleCache {
    method: Method,
    d: usize,
    base_seed: u64,
    fixed: Option<(usize, RuleND)>,
}

impl RuleCache {
    fn new(method: Method, d: usize, base_seed: u64) -> Self {
        Self {
            method,
            d,
            base_seed,
            fixed: None,
        }
    }

    fn with_rule<T>(
        &mut self,
        r: usize,
        rep: usize,
        f: impl FnOnce(&RuleND) -> Result<T>,
    ) -> Result<T> {
        if self.method.is_stochastic() {
            let rule = self
                .method
                .build(r, self.d, rule_seed(self.base_seed, rep, r))?;
            return f(&rule);
        }
        if self.fixed.as_ref().map(|(size, _)| *size) != Some(r) {
            self.fixed = Some((r, self.method.build(r, self.d, 0)?));
        }
        f(&self.fixed.as_ref().expect("just built").1)
    }
}

fn rms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

/// One fresh record per repetition, drawn with the repetition's seed.
fn rep_records(dgp: Dgp, cfg: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    (0..cfg.reps())
        .map(|rep| {
            let seed = rng::rep_seed(cfg.base_seed, rep as u64);
            let data = generate_dataset(dgp, 1, seed, &cfg.theta)?;
            Ok(data.record(0).to_vec())
        })
        .collect()
}

fn convergence(
    cfg: &ExperimentConfig,
    integrand: &dyn Integrand,
    records: &[Vec<f64>],
    reference: &dyn Fn(&[f64]) -> Result<f64>,
    theta: &[f64],
) -> Result<ExperimentResults> {
    let f_ref = records
        .iter()
        .map(|z| reference(z))
        .collect::<Result<Vec<_>>>()?;
    let model = cfg.model.to_string();
    let mut rows = Vec::new();
    let mut aggregate = Vec::new();
    for &method in &cfg.methods {
        let mut cache = RuleCache::new(method, integrand.dim_v(), cfg.base_seed);
        for &r in cfg.r_grid(method) {
            let mut errors = Vec::with_capacity(records.len());
            for (rep, (z, f)) in records.iter().zip(&f_ref).enumerate() {
                let approx =
                    cache.with_rule(r, rep, |rule| rule.apply(|v| integrand.eval(v, z, theta)))?;
                let abs_error = (approx - f).abs();
                errors.push(abs_error);
                rows.push(ConvergenceRow {
                    model: model.clone(),
                    method: method.label().into(),
                    r,
                    rep,
                    abs_error,
                });
            }
            aggregate.push(ConvergenceAggregate {
                model: model.clone(),
                method: method.label().into(),
                r,
                max_abs_error: errors.iter().copied().fold(0.0, f64::max),
                rmse: rms(&errors),
            });
        }
    }
    Ok(ExperimentResults::Convergence { rows, aggregate })
}

/// Per repetition one `(y, x)` draw; the contribution at θ is compared with
/// a Gauss-Hermite reference of size `reference_r`.
pub fn run_smooth_convergence(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    if cfg.experiment != ExperimentKind::SmoothConvergence {
        return Err(Error::config(
            "config is not a smooth convergence experiment",
        ));
    }
    let integrand = cfg.model.build()?;
    let reference_rule = Method::Gh.build(cfg.reference_r, integrand.dim_v(), 0)?;
    let reference = Reference::Rule {
        rule: &reference_rule,
        method: Method::Gh,
        r: cfg.reference_r,
    };
    for &method in &cfg.methods {
        let max_r = *cfg.r_grid(method).last().expect("validated");
        check_reference(integrand.as_ref(), method, max_r, reference)?;
    }
    let records = rep_records(Dgp::RcRegression, cfg)?;
    let theta = cfg.theta.clone();
    let f = |z: &[f64]| reference_rule.apply(|v| integrand.eval(v, z, &theta));
    convergence(cfg, integrand.as_ref(), &records, &f, &cfg.theta)
}

/// Per repetition one `z ~ N(0, 1)`; the indicator rule is compared with the
/// closed-form normal cdf.
pub fn run_ars_convergence(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    if cfg.experiment != ExperimentKind::ArsConvergence {
        return Err(Error::config(
            "config is not an indicator convergence experiment",
        ));
    }
    let integrand = cfg.model.build()?;
    let records = rep_records(Dgp::Ars, cfg)?;
    let f = |z: &[f64]| {
        integrand
            .exact(z, &[])
            .ok_or_else(|| Error::config("indicator model lacks its closed form"))
    };
    convergence(cfg, integrand.as_ref(), &records, &f, &[])
}

/// `√n·E(R(n))` for every (link, method, n). The error is the sup over the
/// probe set of value and gradient errors against the closed form.
/// Deterministic methods give the same error in every repetition; it is
/// computed once and repeated in the per-repetition rows.
pub fn run_link_scaling(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    if cfg.experiment != ExperimentKind::LinkScaling {
        return Err(Error::config("config is not a link scaling experiment"));
    }
    let integrand = cfg.model.build()?;
    let probes = ProbeSet::from_dgp(
        integrand.as_ref(),
        Dgp::RcRegression,
        &cfg.theta,
        cfg.probe_z,
        cfg.probe_theta,
        rng::derive(cfg.base_seed, streams::PROBES),
    )?;
    let refs = ReferenceValues::compute(integrand.as_ref(), &probes, Reference::Exact, 1)?;
    let model = cfg.model.to_string();
    let reps = cfg.reps();
    let mut rows = Vec::new();
    let mut aggregate = Vec::new();
    for link in &cfg.links {
        for &method in &cfg.methods {
            for &n in &cfg.n_values {
                let r = link.evaluate(n)? as usize;
                let errors: Vec<f64> = if method.is_stochastic() {
                    (0..reps)
                        .map(|rep| {
                            let rule = method.build(
                                r,
                                integrand.dim_v(),
                                rule_seed(cfg.base_seed, rep, r),
                            )?;
                            Ok(refs.errors(integrand.as_ref(), &rule, &probes)?.sup)
                        })
                        .collect::<Result<_>>()?
                } else {
                    let rule = method.build(r, integrand.dim_v(), 0)?;
                    vec![refs.errors(integrand.as_ref(), &rule, &probes)?.sup; reps]
                };
                let root_n = (n as f64).sqrt();
                for (rep, &error) in errors.iter().enumerate() {
                    rows.push(LinkRow {
                        model: model.clone(),
                        link: link.label(),
                        method: method.label().into(),
                        n,
                        r,
                        rep,
                        error,
                        scaled: root_n * error,
                    });
                }
                let mean = errors.iter().sum::<f64>() / errors.len() as f64;
                aggregate.push(LinkAggregate {
                    model: model.clone(),
                    link: link.label(),
                    method: method.label().into(),
                    n,
                    r,
                    error: mean,
                    scaled: root_n * mean,
                });
            }
        }
    }
    Ok(ExperimentResults::Link { rows, aggregate })
}

/// Fits θ on `reps` fresh datasets per `n` with every (method, r) and with
/// the Gauss-Hermite reference rule, whose RMSE is the sampling-error floor.
/// Each fit starts from the reference estimate of its dataset. Non-converged
/// fits are excluded from the RMSE; more than `max_non_converged` of them in
/// any cell fails the run.
pub fn run_rmse_fixed_n(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    if cfg.experiment != ExperimentKind::RmseFixedN {
        return Err(Error::config("config is not a fixed-n RMSE experiment"));
    }
    let integrand = cfg.model.build()?;
    let d = integrand.dim_v();
    let theta0 = cfg.theta[0];
    let opts = MaximizeOptions::default();
    let reps = cfg.reps();
    let model = cfg.model.to_string();
    let reference_rule = Method::Gh.build(cfg.reference_r, d, 0)?;

    let mut rows = Vec::new();
    let mut aggregate = Vec::new();
    for &n in &cfg.n_values {
        let data_seed = rng::derive(cfg.base_seed, n);
        // cells[(method index, r)] -> per-rep estimates
        let mut cells: Vec<Vec<Vec<FitRow>>> = cfg
            .methods
            .iter()
            .map(|&m| vec![Vec::with_capacity(reps); cfg.r_grid(m).len()])
            .collect();
        let mut reference_fits = Vec::with_capacity(reps);
        let mut caches: Vec<RuleCache> = cfg
            .methods
            .iter()
            .map(|&m| RuleCache::new(m, d, cfg.base_seed))
            .collect();
        for rep in 0..reps {
            let data = generate_dataset(
                Dgp::RcRegression,
                n as usize,
                rng::rep_seed(data_seed, rep as u64),
                &cfg.theta,
            )?;
            let reference = {
                let problem = MalProblem::new(integrand.as_ref(), &data, &reference_rule)?;
                maximize(&problem, &cfg.theta, &opts)?
            };
            let start = reference.theta_hat.clone();
            reference_fits.push(FitRow {
                model: model.clone(),
                method: REFERENCE_LABEL.into(),
                n,
                r: cfg.reference_r,
                rep,
                theta_hat: reference.theta_hat[0],
                converged: reference.converged,
                iterations: reference.iterations,
                floor_activations: reference.floor_activations,
            });
            for (mi, &method) in cfg.methods.iter().enumerate() {
                // Rebuild deterministic rules only when r changes; visit r in
                // grid order within each repetition.
                for (ri, &r) in cfg.r_grid(method).iter().enumerate() {
                    let est = caches[mi].with_rule(r, rep, |rule| {
                        let problem = MalProblem::new(integrand.as_ref(), &data, rule)?;
                        maximize(&problem, &start, &opts)
                    })?;
                    cells[mi][ri].push(FitRow {
                        model: model.clone(),
                        method: method.label().into(),
                        n,
                        r,
                        rep,
                        theta_hat: est.theta_hat[0],
                        converged: est.converged,
                        iterations: est.iterations,
                        floor_activations: est.floor_activations,
                    });
                }
            }
        }

        let summarize = |fits: &[FitRow]| -> Result<(f64, usize, usize)> {
            let ok: Vec<f64> = fits
                .iter()
                .filter(|f| f.converged)
                .map(|f| f.theta_hat - theta0)
                .collect();
            let bad = fits.len() - ok.len();
            if bad as f64 > cfg.max_non_converged * fits.len() as f64 {
                let first = &fits[0];
                return Err(Error::ExperimentFailure(format!(
                    "{bad} of {} fits did not converge for {}:{} at n = {n}",
                    fits.len(),
                    first.method,
                    first.r
                )));
            }
            Ok((rms(&ok), ok.len(), bad))
        };
        let (floor, ok, bad) = summarize(&reference_fits)?;
        for (mi, &method) in cfg.methods.iter().enumerate() {
            for (ri, &r) in cfg.r_grid(method).iter().enumerate() {
                let (rmse, ok, bad) = summarize(&cells[mi][ri])?;
                aggregate.push(FitAggregate {
                    model: model.clone(),
                    method: method.label().into(),
                    n,
                    r,
                    rmse,
                    floor,
                    converged: ok,
                    non_converged: bad,
                });
                rows.append(&mut cells[mi][ri]);
            }
        }
        aggregate.push(FitAggregate {
            model: model.clone(),
            method: REFERENCE_LABEL.into(),
            n,
            r: cfg.reference_r,
            rmse: floor,
            floor,
            converged: ok,
            non_converged: bad,
        });
        rows.append(&mut reference_fits);
    }
    Ok(ExperimentResults::Fit { rows, aggregate })
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    match cfg.experiment {
        ExperimentKind::SmoothConvergence => run_smooth_convergence(cfg),
        ExperimentKind::ArsConvergence => run_ars_convergence(cfg),
        ExperimentKind::LinkScaling => run_link_scaling(cfg),
        ExperimentKind::RmseFixedN => run_rmse_fixed_n(cfg),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub config: ExperimentConfig,
    pub reps: usize,
    pub version: &'static str,
    pub wall_time_seconds: f64,
    pub results_rows: usize,
    pub aggregate_rows: usize,
    /// How interval rules are used under the Gaussian weight.
    pub interval_rules: &'static str,
}

pub const RESULTS_FILE: &str = "results.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const META_FILE: &str = "meta.json";

/// Runs `cfg` and writes `results.csv`, `aggregate.csv` and `meta.json` into
/// `dir`, creating it if needed.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path) -> Result<(ExperimentResults, RunMeta)> {
    let start = Instant::now();
    let results = run(cfg)?;
    let wall_time_seconds = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(dir)?;
    results.write_csv(&dir.join(RESULTS_FILE), &dir.join(AGGREGATE_FILE))?;
    let meta = RunMeta {
        config: cfg.clone(),
        reps: cfg.reps(),
        version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds,
        results_rows: results.row_count(),
        aggregate_rows: results.aggregate_count(),
        interval_rules: "Gauss-Legendre and midpoint rules on (0,1) composed with the inverse normal cdf, weights unchanged",
    };
    serde_json::to_writer_pretty(File::create(dir.join(META_FILE))?, &meta)?;
    Ok((results, meta))
}
