//! `male`: rules, estimation and experiments from the command line.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use male_core::estimator::maximize;
use male_core::experiments::{self, ExperimentConfig, ExperimentKind, ExperimentResults};
use male_core::models::{generate_dataset, Dgp, ModelId};
use male_core::quadrature::{
    gauss_hermite, gauss_legendre, halton, midpoint, mlhs, monte_carlo_gaussian, product_rule,
    unit_to_gaussian,
};
use male_core::sparse_grid::{smolyak, SparseGridSpec};
use male_core::{Dataset, MalProblem, MaximizeOptions, Method, RuleND, RuleSpec};

#[derive(Parser)]
#[command(
    name = "male",
    version,
    about = "Maximum approximated likelihood estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the nodes and weights of a rule as CSV.
    Quad(QuadArgs),
    /// Maximize the approximated log-likelihood on a dataset.
    Estimate(EstimateArgs),
    /// Approximation error against an exact or fine reference, per rule size.
    Convergence(ConvergenceArgs),
    /// Run an experiment described by a JSON config.
    Experiment(ExperimentArgs),
    /// Draw a synthetic dataset and write it as CSV with a provenance sidecar.
    Dataset(DatasetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Hermite,
    Legendre,
    Midpoint,
    Mc,
    Halton,
    Mlhs,
    Sparse,
}

#[derive(Args)]
struct QuadArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Number of nodes per axis (points for mc, halton, mlhs).
    #[arg(long, required_unless_present = "level")]
    r: Option<usize>,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leading Halton points to drop.
    #[arg(long, default_value_t = 1)]
    skip: u64,
    /// Smolyak level.
    #[arg(long)]
    level: Option<usize>,
    /// Keep legendre and midpoint on (0, 1) instead of mapping to the Gaussian weight.
    #[arg(long)]
    unit: bool,
}

#[derive(Args)]
struct EstimateArgs {
    /// rc_regression, mixed_logit_1d, rc_logit_mv:D, butler_moffitt:T
    #[arg(long)]
    model: ModelId,
    #[arg(long)]
    data: PathBuf,
    /// family:r[:seed], e.g. gh:16 or mc:1000:7
    #[arg(long)]
    rule: RuleSpec,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Include the iteration trace in the report.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct ConvergenceArgs {
    /// rc_regression or ars
    #[arg(long)]
    model: ModelId,
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<Method>,
    /// Comma list; `a,b,...,c` expands a geometric or arithmetic progression.
    #[arg(long)]
    r: String,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 20240101)]
    seed: u64,
    /// Size of the Gauss-Hermite reference for the smooth model.
    #[arg(long, default_value_t = 100)]
    reference_r: usize,
    /// Per-record results; the aggregate goes next to it unless --aggregate is given.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    aggregate: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Start from a built-in configuration instead of a file.
    #[arg(long, value_enum, conflicts_with = "config")]
    preset: Option<Preset>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved config as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    SmoothConvergence,
    ArsConvergence,
    LinkScaling,
    RmseFixedN,
}

impl From<Preset> for ExperimentKind {
    fn from(p: Preset) -> Self {
        match p {
            Preset::SmoothConvergence => ExperimentKind::SmoothConvergence,
            Preset::ArsConvergence => ExperimentKind::ArsConvergence,
            Preset::LinkScaling => ExperimentKind::LinkScaling,
            Preset::RmseFixedN => ExperimentKind::RmseFixedN,
        }
    }
}

#[derive(Args)]
struct DatasetArgs {
    /// rc_regression, mixed_logit_1d, butler_moffitt:T or ars
    #[arg(long)]
    dgp: Dgp,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn build_rule(a: &QuadArgs) -> Result<RuleND> {
    let r = || a.r.context("--r is required for this family");
    let gaussian = |rule| -> Result<_> {
        Ok(if a.unit {
            rule
        } else {
            unit_to_gaussian(&rule)?
        })
    };
    Ok(match a.family {
        Family::Hermite => product_rule(&gauss_hermite(r()?)?, a.d)?,
        Family::Legendre => product_rule(&gaussian(gauss_legendre(r()?, 0.0, 1.0)?)?, a.d)?,
        Family::Midpoint => product_rule(&gaussian(midpoint(r()?, 0.0, 1.0)?)?, a.d)?,
        Family::Mc => monte_carlo_gaussian(r()?, a.d, a.seed)?,
        Family::Halton => halton(r()?, a.d, a.skip)?,
        Family::Mlhs => mlhs(r()?, a.d, a.seed)?,
        Family::Sparse => {
            let level = a
                .level
                .context("--level is required for the sparse family")?;
            smolyak(&SparseGridSpec::new(a.d, level)?)?
        }
    })
}

fn quad(a: &QuadArgs) -> Result<()> {
    let rule = build_rule(a)?;
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    rule.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn estimate(a: &EstimateArgs) -> Result<()> {
    let model = a.model.build()?;
    let data =
        Dataset::read_csv(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let rule = a.rule.build(model.dim_v())?;
    let problem = MalProblem::new(model.as_ref(), &data, &rule)?;
    let mut theta0 = a
        .theta0
        .clone()
        .unwrap_or_else(|| vec![0.0; model.dim_theta()]);
    if theta0.len() != model.dim_theta() {
        bail!(
            "{} has {} parameters, --theta0 gives {}",
            model.name(),
            model.dim_theta(),
            theta0.len()
        );
    }
    if a.theta0.is_none() {
        model.theta_box().project(&mut theta0);
    }
    let opts = MaximizeOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        ..MaximizeOptions::default()
    };
    let est = maximize(&problem, &theta0, &opts)?;
    let mut report = serde_json::json!({
        "theta_hat": est.theta_hat,
        "std_errors": est.std_errors,
        "loglik": est.loglik,
        "converged": est.converged,
        "floor_activations": est.floor_activations,
        "floor_activations_total": est.floor_activations_total,
        "iterations": est.iterations,
        "score_norm": est.score_norm,
        "rule_spec": a.rule.to_string(),
        "seed": a.rule.seed,
    });
    if a.trace {
        report["trace"] = serde_json::to_value(&est.trace)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

/// Parses `2,4,8` or `2,4,...,16384`. The two terms before `...` fix the
/// step: a ratio when it is an integer above one, a difference otherwise.
fn parse_grid(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect();
    let num =
        |p: &str| -> Result<usize> { p.parse().with_context(|| format!("bad grid entry '{p}'")) };
    let Some(pos) = parts.iter().position(|p| *p == "...") else {
        return parts.iter().map(|p| num(p)).collect();
    };
    if pos < 2 || pos + 2 != parts.len() {
        bail!("'...' needs two terms before it and one after: {s}");
    }
    let mut out: Vec<usize> = parts[..pos].iter().map(|p| num(p)).collect::<Result<_>>()?;
    let (a, b, end) = (out[pos - 2], out[pos - 1], num(parts[pos + 1])?);
    if b <= a {
        bail!("grid must increase: {s}");
    }
    let geometric = a > 0 && b % a == 0 && b / a > 1;
    let mut x = b;
    loop {
        x = if geometric { x * (b / a) } else { x + (b - a) };
        if x > end {
            break;
        }
        out.push(x);
    }
    if *out.last().unwrap_or(&0) != end {
        bail!("{end} is not on the progression starting {a}, {b}");
    }
    Ok(out)
}

fn default_aggregate(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("convergence");
    out.with_file_name(format!("{stem}_aggregate.csv"))
}

fn convergence(a: &ConvergenceArgs) -> Result<()> {
    let mut cfg = match a.model {
        ModelId::RcRegression => ExperimentConfig::smooth_convergence(),
        ModelId::Ars => ExperimentConfig::ars_convergence(),
        other => bail!("convergence supports rc_regression and ars, not {other}"),
    };
    cfg.methods = a.methods.clone();
    cfg.r_values = parse_grid(&a.r)?;
    cfg.r_values_by_method.clear();
    cfg.reps = a.reps;
    cfg.base_seed = a.seed;
    cfg.reference_r = a.reference_r;
    cfg.validate()?;
    let results = experiments::run(&cfg)?;
    let aggregate = a
        .aggregate
        .clone()
        .unwrap_or_else(|| default_aggregate(&a.out));
    results.write_csv(&a.out, &aggregate)?;
    eprintln!(
        "wrote {} rows to {} and {} rows to {}",
        results.row_count(),
        a.out.display(),
        results.aggregate_count(),
        aggregate.display()
    );
    Ok(())
}

fn experiment(a: &ExperimentArgs) -> Result<()> {
    let mut cfg = match (&a.config, a.preset) {
        (Some(path), _) => {
            ExperimentConfig::read(path).with_context(|| format!("reading {}", path.display()))?
        }
        (None, Some(p)) => ExperimentConfig::preset(p.into()),
        (None, None) => bail!("give --config or --preset"),
    };
    if a.reps.is_some() {
        cfg.reps = a.reps;
    }
    if let Some(seed) = a.seed {
        cfg.base_seed = seed;
    }
    cfg.validate()?;
    if a.print_config {
        println!("{}", cfg.to_json()?);
        return Ok(());
    }
    let dir = a
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .context("no output directory: pass --out or set \"output\" in the config")?;
    let (results, meta) = experiments::run_to_dir(&cfg, &dir)?;
    if let ExperimentResults::Fit { aggregate, .. } = &results {
        let failed: usize = aggregate.iter().map(|a| a.non_converged).sum();
        if failed > 0 {
            eprintln!("{failed} fits did not converge");
        }
    }
    eprintln!(
        "{:?}: {} result rows, {} aggregate rows in {:.1}s, written to {}",
        cfg.experiment,
        meta.results_rows,
        meta.aggregate_rows,
        meta.wall_time_seconds,
        dir.display()
    );
    Ok(())
}

fn dataset(a: &DatasetArgs) -> Result<()> {
    let data = generate_dataset(a.dgp, a.n, a.seed, &a.theta)?;
    data.write_csv(&a.out)?;
    eprintln!("wrote {} records to {}", data.n(), a.out.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Quad(a) => quad(a),
        Command::Estimate(a) => estimate(a),
        Command::Convergence(a) => convergence(a),
        Command::Experiment(a) => experiment(a),
        Command::Dataset(a) => dataset(a),
    }
}
