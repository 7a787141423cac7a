//! Data records `z_i` and the synthetic data-generating processes.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::distr::{Distribution, Uniform};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::logistic;
use crate::rng::{self, streams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Dgp {
    /// `y = x β + ε`, `x, ε ~ N(0, 1)`, `β ~ N(β̄, 1)`; emits `(y, x)`.
    RcRegression,
    /// `x ~ N(0, 1)`, `β ~ N(μ, σ²)`, `y ~ Bernoulli(logistic(x β))`; emits
    /// the signed covariate `z = x (2y - 1)`.
    MixedLogit1d,
    /// Covariates `z_t ~ N(0, 1)`, `t = 1..T`.
    ButlerMoffitt(usize),
    /// `z ~ N(0, 1)`.
    Ars,
}

impl Dgp {
    pub fn dim_z(&self) -> usize {
        match *self {
            Dgp::RcRegression => 2,
            Dgp::MixedLogit1d | Dgp::Ars => 1,
            Dgp::ButlerMoffitt(t) => t,
        }
    }

    fn theta_len(&self) -> usize {
        match self {
            Dgp::RcRegression => 1,
            Dgp::MixedLogit1d | Dgp::ButlerMoffitt(_) => 2,
            Dgp::Ars => 0,
        }
    }
}

impl FromStr for Dgp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("butler_moffitt", t)) => t
                .parse()
                .ok()
                .filter(|&t| t >= 1)
                .map(Dgp::ButlerMoffitt)
                .ok_or_else(|| Error::invalid(format!("bad period count in '{s}'"))),
            None if s == "rc_regression" => Ok(Dgp::RcRegression),
            None if s == "mixed_logit_1d" => Ok(Dgp::MixedLogit1d),
            None if s == "butler_moffitt" => Ok(Dgp::ButlerMoffitt(2)),
            None if s == "ars" => Ok(Dgp::Ars),
            _ => Err(Error::invalid(format!(
                "unknown data-generating process '{s}'"
            ))),
        }
    }
}

impl std::fmt::Display for Dgp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dgp::RcRegression => write!(f, "rc_regression"),
            Dgp::MixedLogit1d => write!(f, "mixed_logit_1d"),
            Dgp::ButlerMoffitt(t) => write!(f, "butler_moffitt:{t}"),
            Dgp::Ars => write!(f, "ars"),
        }
    }
}

impl TryFrom<String> for Dgp {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Dgp> for String {
    fn from(d: Dgp) -> String {
        d.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Synthetic {
        dgp: Dgp,
        seed: u64,
        n: usize,
        true_theta: Vec<f64>,
    },
    File {
        path: PathBuf,
    },
    Derived,
}

/// `n` records of dimension `q`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim_z: usize,
    values: Vec<f64>,
    provenance: Provenance,
}

impl Dataset {
    pub fn from_records(dim_z: usize, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if dim_z == 0 || values.is_empty() || !values.len().is_multiple_of(dim_z) {
            return Err(Error::invalid(format!(
                "dataset needs n >= 1 records of dimension {dim_z}, got {} values",
                values.len()
            )));
        }
        Ok(Self {
            dim_z,
            values,
            provenance,
        })
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.dim_z
    }

    pub fn dim_z(&self) -> usize {
        self.dim_z
    }

    pub fn record(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim_z..(i + 1) * self.dim_z]
    }

    pub fn records(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim_z)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Concatenation of `self` with itself `times` times.
    pub fn repeated(&self, times: usize) -> Self {
        Self {
            dim_z: self.dim_z,
            values: self.values.repeat(times),
            provenance: Provenance::Derived,
        }
    }

    /// Writes the CSV (`z_1,…,z_q` header) and, for synthetic data, a sidecar
    /// JSON next to it (`<path>.json`).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record((1..=self.dim_z).map(|k| format!("z_{k}")))?;
        for rec in self.records() {
            w.write_record(rec.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        if let Provenance::Synthetic { .. } = self.provenance {
            let side = BufWriter::new(File::create(sidecar_path(path))?);
            serde_json::to_writer_pretty(side, &self.provenance)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let dim_z = r.headers()?.len();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            for field in rec.iter() {
                values.push(field.trim().parse::<f64>().map_err(|e| {
                    Error::invalid(format!("{}: bad value '{field}': {e}", path.display()))
                })?);
            }
        }
        let side = sidecar_path(path);
        let provenance = if side.exists() {
            serde_json::from_reader(BufReader::new(File::open(side)?))?
        } else {
            Provenance::File {
                path: path.to_path_buf(),
            }
        };
        Self::from_records(dim_z, values, provenance)
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Draws `n` records from `dgp`; a pure function of its arguments.
pub fn generate_dataset(dgp: Dgp, n: usize, seed: u64, true_theta: &[f64]) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("dataset needs n >= 1"));
    }
    if true_theta.len() != dgp.theta_len() {
        return Err(Error::invalid(format!(
            "{dgp} expects {} true parameters, got {}",
            dgp.theta_len(),
            true_theta.len()
        )));
    }
    let mut rng = rng::stream(seed, streams::DATA);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut values = Vec::with_capacity(n * dgp.dim_z());
    match dgp {
        Dgp::RcRegression => {
            for _ in 0..n {
                let x = normal();
                let beta = true_theta[0] + normal();
                let eps = normal();
                values.push(x * beta + eps);
                values.push(x);
            }
        }
        Dgp::MixedLogit1d => {
            let (mu, sigma) = (true_theta[0], true_theta[1]);
            let mut rng = rng::stream(seed, streams::DATA + 100);
            let unif = Uniform::new(0.0, 1.0).expect("unit interval");
            for _ in 0..n {
                let x = normal();
                let beta = mu + sigma * normal();
                let y = unif.sample(&mut rng) < logistic(x * beta);
                values.push(if y { x } else { -x });
            }
        }
        Dgp::ButlerMoffitt(t) => {
            for _ in 0..n * t {
                values.push(normal());
            }
        }
        Dgp::Ars => {
            for _ in 0..n {
                values.push(normal());
            }
        }
    }
    Dataset::from_records(
        dgp.dim_z(),
        values,
        Provenance::Synthetic {
            dgp,
            seed,
            n,
            true_theta: true_theta.to_vec(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        for dgp in [
            Dgp::RcRegression,
            Dgp::MixedLogit1d,
            Dgp::ButlerMoffitt(3),
            Dgp::Ars,
        ] {
            let theta = vec![0.5; dgp.theta_len()];
            let a = generate_dataset(dgp, 25, 77, &theta).unwrap();
            let b = generate_dataset(dgp, 25, 77, &theta).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.dim_z(), dgp.dim_z());
            let c = generate_dataset(dgp, 25, 78, &theta).unwrap();
            assert_ne!(a.values, c.values);
        }
    }

    #[test]
    fn regression_outcome_mean_is_near_zero() {
        let data = generate_dataset(Dgp::RcRegression, 100_000, 3, &[0.0]).unwrap();
        let mean = data.records().map(|z| z[0]).sum::<f64>() / data.n() as f64;
        assert!(mean.abs() <= 4.0 * 2f64.sqrt() / 100_000f64.sqrt());
    }

    #[test]
    fn single_record() {
        let data = generate_dataset(Dgp::RcRegression, 1, 3, &[0.0]).unwrap();
        assert_eq!(data.n(), 1);
        assert_eq!(data.record(0).len(), 2);
    }

    #[test]
    fn bad_arguments() {
        assert!(matches!(
            "probit".parse::<Dgp>(),
            Err(Error::InvalidArgument(_))
        ));
        assert!("butler_moffitt:0".parse::<Dgp>().is_err());
        assert_eq!(
            "butler_moffitt:4".parse::<Dgp>().unwrap(),
            Dgp::ButlerMoffitt(4)
        );
        assert!(generate_dataset(Dgp::RcRegression, 0, 1, &[0.0]).is_err());
        assert!(generate_dataset(Dgp::RcRegression, 5, 1, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn csv_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let data = generate_dataset(Dgp::ButlerMoffitt(2), 10, 5, &[1.0, 0.5]).unwrap();
        data.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("z_1,z_2\n"));
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(side["dgp"], "butler_moffitt:2");
        assert_eq!(side["seed"], 5);
        assert_eq!(side["n"], 10);
        let back = Dataset::read_csv(&path).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn plain_file_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plain.csv");
        std::fs::write(&path, "z_1\n0.5\n-1.25\n").unwrap();
        let data = Dataset::read_csv(&path).unwrap();
        assert_eq!(data.n(), 2);
        assert!(matches!(data.provenance(), Provenance::File { .. }));
        std::fs::write(&path, "z_1\nabc\n").unwrap();
        assert!(Dataset::read_csv(&path).is_err());
    }
}
