//! Approximated log-likelihood `L̃_n(θ) = (1/n) Σ_i log f̃_r(z_i; θ)` with
//! analytic score and Hessian, and its maximizer over the parameter box.
//!
//! One rule is shared by all observations. Contributions below
//! `floor_delta` (possible with negative sparse-grid weights or far tails)
//! are clamped to the floor and counted, so a run never silently takes the
//! logarithm of a non-positive number.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::models::{Dataset, Integrand};
use crate::{Error, Result, RuleND};

pub const DEFAULT_FLOOR: f64 = 1e-12;

pub struct MalProblem<'a> {
    integrand: &'a dyn Integrand,
    data: &'a Dataset,
    rule: &'a RuleND,
    floor_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub value: f64,
    pub floored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLik {
    pub value: f64,
    pub floor_activations: usize,
}

/// Log-likelihood with its derivatives at one θ.
#[derive(Debug, Clone)]
pub struct LikelihoodEval {
    pub loglik: f64,
    pub score: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub floor_activations: usize,
}

impl<'a> MalProblem<'a> {
    pub fn new(integrand: &'a dyn Integrand, data: &'a Dataset, rule: &'a RuleND) -> Result<Self> {
        if rule.d() != integrand.dim_v() {
            return Err(Error::config(format!(
                "rule dimension {} does not match integration dimension {} of {}",
                rule.d(),
                integrand.dim_v(),
                integrand.name()
            )));
        }
        if data.dim_z() != integrand.dim_z() {
            return Err(Error::config(format!(
                "records have dimension {}, {} expects {}",
                data.dim_z(),
                integrand.name(),
                integrand.dim_z()
            )));
        }
        Ok(Self {
            integrand,
            data,
            rule,
            floor_delta: DEFAULT_FLOOR,
        })
    }

    pub fn with_floor(mut self, floor_delta: f64) -> Result<Self> {
        if !(floor_delta > 0.0) {
            return Err(Error::config("floor_delta must be positive"));
        }
        self.floor_delta = floor_delta;
        Ok(self)
    }

    pub fn integrand(&self) -> &dyn Integrand {
        self.integrand
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn rule(&self) -> &RuleND {
        self.rule
    }

    pub fn dim_theta(&self) -> usize {
        self.integrand.dim_theta()
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if !self.integrand.theta_box().contains(theta) {
            return Err(Error::invalid(format!(
                "theta {theta:?} outside the parameter box of {}",
                self.integrand.name()
            )));
        }
        Ok(())
    }

    fn clamp(&self, raw: f64) -> Contribution {
        if raw < self.floor_delta {
            Contribution {
                value: self.floor_delta,
                floored: true,
            }
        } else {
            Contribution {
                value: raw,
                floored: false,
            }
        }
    }

    /// `f̃_r(z; θ) = Σ_j w_j φ(v_j, z, θ)`, clamped at the floor.
    pub fn contribution(&self, z: &[f64], theta: &[f64]) -> Result<Contribution> {
        self.check_theta(theta)?;
        let raw = self.rule.apply(|v| self.integrand.eval(v, z, theta))?;
        Ok(self.clamp(raw))
    }

    pub fn loglik(&self, theta: &[f64]) -> Result<LogLik> {
        self.check_theta(theta)?;
        let mut sum = 0.0;
        let mut floored = 0;
        for z in self.data.records() {
            let raw = self.rule.apply(|v| self.integrand.eval(v, z, theta))?;
            let c = self.clamp(raw);
            floored += c.floored as usize;
            sum += c.value.ln();
        }
        Ok(LogLik {
            value: sum / self.data.n() as f64,
            floor_activations: floored,
        })
    }

    /// Value, score and Hessian of `L̃_n` in one pass over the data.
    pub fn evaluate(&self, theta: &[f64]) -> Result<LikelihoodEval> {
        self.check_theta(theta)?;
        if !self.integrand.has_derivatives() {
            return Err(Error::UnsupportedOperation(format!(
                "{} has no parameter derivatives",
                self.integrand.name()
            )));
        }
        let p = self.dim_theta();
        let mut node_grad = vec![0.0; p];
        let mut node_hess = vec![0.0; p * p];
        let mut f_grad = vec![0.0; p];
        let mut f_hess = vec![0.0; p * p];
        let mut score = DVector::zeros(p);
        let mut hessian = DMatrix::zeros(p, p);
        let mut loglik = 0.0;
        let mut floored = 0;
        for z in self.data.records() {
            f_grad.fill(0.0);
            f_hess.fill(0.0);
            let mut f = 0.0;
            for (j, (v, &w)) in self.rule.points().zip(self.rule.weights()).enumerate() {
                let phi =
                    self.integrand
                        .eval_derivs(v, z, theta, &mut node_grad, &mut node_hess)?;
                if !phi.is_finite() {
                    return Err(Error::NonFiniteIntegrand {
                        index: j,
                        point: v.to_vec(),
                        value: phi,
                    });
                }
                f += w * phi;
                for (a, g) in f_grad.iter_mut().zip(&node_grad) {
                    *a += w * g;
                }
                for (a, h) in f_hess.iter_mut().zip(&node_hess) {
                    *a += w * h;
                }
            }
            let c = self.clamp(f);
            floored += c.floored as usize;
            loglik += c.value.ln();
            if c.floored {
                // log δ does not move with θ
                continue;
            }
            let inv = 1.0 / c.value;
            for a in 0..p {
                let ga = f_grad[a] * inv;
                score[a] += ga;
                for b in 0..p {
                    hessian[(a, b)] += f_hess[a * p + b] * inv - ga * f_grad[b] * inv;
                }
            }
        }
        let n = self.data.n() as f64;
        Ok(LikelihoodEval {
            loglik: loglik / n,
            score: score / n,
            hessian: hessian / n,
            floor_activations: floored,
        })
    }

    pub fn score(&self, theta: &[f64]) -> Result<DVector<f64>> {
        Ok(self.evaluate(theta)?.score)
    }

    pub fn hessian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.evaluate(theta)?.hessian)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximizeOptions {
    /// Stop once the projected score satisfies `‖·‖∞ <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest eigenvalue allowed in the modified Newton Hessian.
    pub eigen_floor: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            eigen_floor: 1e-8,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub loglik: f64,
    pub score_norm: f64,
    pub step_length: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MalEstimate {
    pub theta_hat: Vec<f64>,
    pub loglik: f64,
    /// Infinity norm of the projected score at `theta_hat`.
    pub score_norm: f64,
    /// `-n ∇²L̃_n(θ̂)`.
    pub observed_information: Vec<Vec<f64>>,
    /// From the inverse observed information over the free coordinates;
    /// pinned coordinates report 0, NaN when the information is not
    /// positive definite.
    pub std_errors: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Clamped contributions at `theta_hat`.
    pub floor_activations: usize,
    /// Clamped contributions over every evaluation of the run.
    pub floor_activations_total: usize,
    pub trace: Vec<TraceEntry>,
}

impl MalEstimate {
    pub fn floor_flag(&self) -> bool {
        self.floor_activations_total > 0
    }
}

fn projected_score(problem: &MalProblem<'_>, theta: &[f64], score: &DVector<f64>) -> Vec<f64> {
    let bounds = problem.integrand.theta_box();
    theta
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let g = score[i];
            if bounds.is_pinned(i)
                || (t <= bounds.lower[i] && g < 0.0)
                || (t >= bounds.upper[i] && g > 0.0)
            {
                0.0
            } else {
                g
            }
        })
        .collect()
}

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Newton ascent on `L̃_n` with eigenvalue-shifted Hessian, projection onto
/// the parameter box and backtracking on the objective. Failure to converge
/// is reported in the result, not as an error.
pub fn maximize(
    problem: &MalProblem<'_>,
    theta0: &[f64],
    opts: &MaximizeOptions,
) -> Result<MalEstimate> {
    let bounds = problem.integrand.theta_box().clone();
    if !bounds.contains(theta0) {
        return Err(Error::invalid(format!(
            "starting value {theta0:?} outside the parameter box"
        )));
    }
    let p = problem.dim_theta();
    let mut theta = theta0.to_vec();
    let mut eval = problem.evaluate(&theta)?;
    let mut floor_total = eval.floor_activations;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let pg = projected_score(problem, &theta, &eval.score);
        let norm = inf_norm(&pg);
        if norm <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        let free: Vec<usize> = (0..p).filter(|&i| pg[i] != 0.0).collect();
        let k = free.len();
        let mut h = DMatrix::from_fn(k, k, |a, b| eval.hessian[(free[a], free[b])]);
        let g = DVector::from_fn(k, |a, _| eval.score[free[a]]);
        let top = SymmetricEigen::new(h.clone()).eigenvalues.max();
        if !top.is_finite() {
            break;
        }
        if top > -opts.eigen_floor {
            for i in 0..k {
                h[(i, i)] -= top + opts.eigen_floor;
            }
        }
        let Some(step) = (-h).cholesky().map(|c| c.solve(&g)) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let mut cand = theta.clone();
            for (a, &i) in free.iter().enumerate() {
                cand[i] += t * step[a];
            }
            bounds.project(&mut cand);
            let moved: f64 = (0..p).map(|i| eval.score[i] * (cand[i] - theta[i])).sum();
            if cand == theta {
                break;
            }
            let trial = problem.loglik(&cand)?;
            floor_total += trial.floor_activations;
            // Close to the optimum the predicted gain drops below the
            // rounding error of L̃_n; accept anything not worse than that.
            let noise = 4.0 * f64::EPSILON * (1.0 + eval.loglik.abs());
            let sufficient = trial.value >= eval.loglik + opts.armijo * moved
                || (moved <= noise && trial.value >= eval.loglik - noise);
            if trial.value.is_finite() && sufficient {
                accepted = Some(cand);
                break;
            }
            t *= 0.5;
        }
        let Some(next) = accepted else {
            break;
        };
        theta = next;
        eval = problem.evaluate(&theta)?;
        floor_total += eval.floor_activations;
        iterations += 1;
        trace.push(TraceEntry {
            iteration: iterations,
            loglik: eval.loglik,
            score_norm: inf_norm(&projected_score(problem, &theta, &eval.score)),
            step_length: t,
        });
    }

    let n = problem.data.n() as f64;
    let info = -eval.hessian.clone() * n;
    let free: Vec<usize> = (0..p).filter(|&i| !bounds.is_pinned(i)).collect();
    let mut std_errors = vec![0.0; p];
    if !free.is_empty() {
        let sub = DMatrix::from_fn(free.len(), free.len(), |a, b| info[(free[a], free[b])]);
        match sub.cholesky() {
            Some(c) => {
                let inv = c.inverse();
                for (a, &i) in free.iter().enumerate() {
                    std_errors[i] = inv[(a, a)].sqrt();
                }
            }
            None => free.iter().for_each(|&i| std_errors[i] = f64::NAN),
        }
    }
    Ok(MalEstimate {
        score_norm: inf_norm(&projected_score(problem, &theta, &eval.score)),
        theta_hat: theta,
        loglik: eval.loglik,
        observed_information: (0..p)
            .map(|i| (0..p).map(|j| info[(i, j)]).collect())
            .collect(),
        std_errors,
        iterations,
        converged,
        floor_activations: eval.floor_activations,
        floor_activations_total: floor_total,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::method::Method;
    use crate::models::{
        butler_moffitt, generate_dataset, mixed_logit_1d, rc_logit_mv, rc_regression, Dgp,
        Provenance, ThetaBox,
    };
    use crate::sparse_grid::{smolyak, SparseGridSpec};

    fn gh(r: usize) -> RuleND {
        Method::Gh.build(r, 1, 0).unwrap()
    }

    fn records(dim_z: usize, values: Vec<f64>) -> Dataset {
        Dataset::from_records(dim_z, values, Provenance::Derived).unwrap()
    }

    #[test]
    fn constant_integrands_give_exact_contributions() {
        let logit = mixed_logit_1d();
        let data = records(1, vec![0.0]);
        for rule in [gh(5), Method::Mc.build(10, 1, 3).unwrap()] {
            let prob = MalProblem::new(&logit, &data, &rule).unwrap();
            let c = prob.contribution(&[0.0], &[1.0, 2.0]).unwrap();
            assert!((c.value - 0.5).abs() < 1e-15);
            assert!(
                (prob.loglik(&[1.0, 2.0]).unwrap().value - (-std::f64::consts::LN_2)).abs() < 1e-7
            );
        }
        let reg = rc_regression();
        let data = records(2, vec![1.0, 0.0]);
        for rule in [gh(3), Method::Halton.build(17, 1, 0).unwrap()] {
            let prob = MalProblem::new(&reg, &data, &rule).unwrap();
            let c = prob.contribution(&[1.0, 0.0], &[0.4]).unwrap();
            assert!((c.value - 0.241_970_7).abs() < 1e-7);
            assert!((c.value - crate::special::normal_pdf(1.0)).abs() < 1e-15);
        }
        let bm = butler_moffitt(1).unwrap();
        let data = records(1, vec![0.3]);
        let rule = gh(20);
        let prob = MalProblem::new(&bm, &data, &rule).unwrap();
        let c = prob.contribution(&[0.3], &[1.0, 0.0]).unwrap();
        assert!((c.value - 0.5).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let reg = rc_regression();
        let data = records(1, vec![0.0]);
        let rule = gh(3);
        assert!(matches!(
            MalProblem::new(&reg, &data, &rule),
            Err(Error::InvalidConfiguration(_))
        ));
        let data = records(2, vec![0.0, 0.0]);
        let rule2 = Method::Gh.build(3, 2, 0).unwrap();
        assert!(MalProblem::new(&reg, &data, &rule2).is_err());
        let prob = MalProblem::new(&reg, &data, &rule).unwrap();
        assert!(matches!(
            prob.loglik(&[11.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn duplicated_records_keep_the_mean() {
        let reg = rc_regression();
        let data = generate_dataset(Dgp::RcRegression, 50, 9, &[0.0]).unwrap();
        let twice = data.repeated(2);
        let rule = gh(12);
        let a = MalProblem::new(&reg, &data, &rule)
            .unwrap()
            .evaluate(&[0.2])
            .unwrap();
        let b = MalProblem::new(&reg, &twice, &rule)
            .unwrap()
            .evaluate(&[0.2])
            .unwrap();
        assert!((a.loglik - b.loglik).abs() < 1e-14);
        assert!((a.score[0] - b.score[0]).abs() < 1e-14);
        assert!((a.hessian[(0, 0)] - b.hessian[(0, 0)]).abs() < 1e-14);
    }

    #[test]
    fn fine_hermite_rules_agree() {
        // The integrand has width 1/|x| in v, so 100 nodes are near exact only
        // for moderate |x|; records beyond |x| = 3 are checked against the
        // closed form instead.
        let reg = rc_regression();
        let (r100, r99) = (gh(100), gh(99));
        let data = generate_dataset(Dgp::RcRegression, 500, 4, &[0.0]).unwrap();
        let (inner, outer): (Vec<&[f64]>, Vec<&[f64]>) =
            data.records().partition(|z| z[1].abs() <= 3.0);
        assert!(!outer.is_empty());
        let flat = |rs: &[&[f64]]| records(2, rs.iter().flat_map(|z| z.to_vec()).collect());
        let inner = flat(&inner);
        let a = MalProblem::new(&reg, &inner, &r100)
            .unwrap()
            .loglik(&[0.0])
            .unwrap();
        let b = MalProblem::new(&reg, &inner, &r99)
            .unwrap()
            .loglik(&[0.0])
            .unwrap();
        assert!((a.value - b.value).abs() < 1e-10);

        let exact: f64 = data
            .records()
            .map(|z| reg.exact(z, &[0.0]).unwrap().ln())
            .sum::<f64>()
            / data.n() as f64;
        for rule in [&r100, &r99] {
            let l = MalProblem::new(&reg, &data, rule)
                .unwrap()
                .loglik(&[0.0])
                .unwrap();
            assert!((l.value - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn symmetric_records_cancel_in_the_location_score() {
        let logit = mixed_logit_1d();
        let data = records(1, vec![1.3, -1.3]);
        let rule = gh(16);
        let prob = MalProblem::new(&logit, &data, &rule).unwrap();
        let s = prob.score(&[0.0, 2.0]).unwrap();
        assert!(s[0].abs() < 1e-10);
    }

    fn fd_score_check(integrand: &dyn Integrand, data: &Dataset, rule: &RuleND, theta: &[f64]) {
        let prob = MalProblem::new(integrand, data, rule).unwrap();
        let eval = prob.evaluate(theta).unwrap();
        let p = theta.len();
        let h = 1e-6;
        for a in 0..p {
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[a] += h;
            tm[a] -= h;
            let fd =
                (prob.loglik(&tp).unwrap().value - prob.loglik(&tm).unwrap().value) / (2.0 * h);
            let dev = (eval.score[a] - fd).abs() / eval.score[a].abs().max(1.0);
            assert!(
                dev <= 1e-6,
                "{}: score {a}: {} vs {fd}",
                integrand.name(),
                eval.score[a]
            );
            let sp = prob.score(&tp).unwrap();
            let sm = prob.score(&tm).unwrap();
            for b in 0..p {
                let fd = (sp[b] - sm[b]) / (2.0 * h);
                let dev = (eval.hessian[(b, a)] - fd).abs() / fd.abs().max(1.0);
                assert!(dev <= 1e-5, "{}: hessian ({b},{a})", integrand.name());
                assert!((eval.hessian[(a, b)] - eval.hessian[(b, a)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn score_and_hessian_match_finite_differences() {
        let logit = mixed_logit_1d();
        let data = generate_dataset(Dgp::MixedLogit1d, 80, 1, &[0.5, 1.0]).unwrap();
        fd_score_check(&logit, &data, &gh(20), &[0.3, 0.8]);

        let bm = butler_moffitt(3).unwrap();
        let data = generate_dataset(Dgp::ButlerMoffitt(3), 60, 2, &[1.0, 0.5]).unwrap();
        fd_score_check(&bm, &data, &gh(20), &[0.9, 0.4]);

        let reg = rc_regression();
        let data = generate_dataset(Dgp::RcRegression, 100, 3, &[0.0]).unwrap();
        fd_score_check(
            &reg,
            &data,
            &Method::Halton.build(64, 1, 0).unwrap(),
            &[0.1],
        );

        let mv = rc_logit_mv(2).unwrap();
        let data = records(2, vec![0.5, -1.0, 1.2, 0.3, -0.7, 0.9, 0.1, 0.4]);
        let theta = mv.pack_theta(&[0.2, -0.1], &[vec![1.1], vec![0.3, 0.8]]);
        fd_score_check(&mv, &data, &Method::Gh.build(8, 2, 0).unwrap(), &theta);
    }

    #[test]
    fn constant_integrand_is_rule_invariant() {
        let reg = rc_regression();
        let data = records(2, vec![0.3, 0.0, -1.2, 0.0, 2.0, 0.0]);
        let rules = [
            gh(3),
            Method::Mc.build(50, 1, 8).unwrap(),
            Method::Halton.build(17, 1, 0).unwrap(),
            Method::Gl.build(9, 1, 0).unwrap(),
        ];
        let evals: Vec<_> = rules
            .iter()
            .map(|r| {
                MalProblem::new(&reg, &data, r)
                    .unwrap()
                    .evaluate(&[1.5])
                    .unwrap()
            })
            .collect();
        for e in &evals[1..] {
            assert!((e.loglik - evals[0].loglik).abs() < 1e-14);
            assert!((e.score[0] - evals[0].score[0]).abs() < 1e-14);
            assert!((e.hessian[(0, 0)] - evals[0].hessian[(0, 0)]).abs() < 1e-14);
        }
    }

    #[test]
    fn negative_sparse_weights_trigger_the_floor() {
        let mv = rc_logit_mv(2).unwrap();
        let rule = smolyak::<f64>(&SparseGridSpec::new(2, 3).unwrap()).unwrap();
        assert!(rule.has_negative_weights());
        let z = [-0.95, -2.3];
        let theta = mv.pack_theta(&[0.16, 1.72], &[vec![1.0], vec![-8.74, 8.37]]);
        let raw = rule.apply(|v| mv.eval(v, &z, &theta)).unwrap();
        assert!(raw < 0.0, "raw contribution {raw}");
        let data = records(2, vec![z[0], z[1], 0.5, 0.5]);
        let prob = MalProblem::new(&mv, &data, &rule).unwrap();
        let c = prob.contribution(&z, &theta).unwrap();
        assert!(c.floored);
        assert_eq!(c.value, DEFAULT_FLOOR);
        let ll = prob.loglik(&theta).unwrap();
        assert_eq!(ll.floor_activations, 1);
        assert!(ll.value.is_finite());
        let eval = prob.evaluate(&theta).unwrap();
        assert_eq!(eval.floor_activations, 1);

        // the clamped record is flat in θ: only the other record moves the score
        let rest = records(2, vec![0.5, 0.5]);
        let alone = MalProblem::new(&mv, &rest, &rule)
            .unwrap()
            .evaluate(&theta)
            .unwrap();
        for a in 0..theta.len() {
            assert!((eval.score[a] - 0.5 * alone.score[a]).abs() <= 1e-15);
            for b in 0..theta.len() {
                assert!((eval.hessian[(a, b)] - 0.5 * alone.hessian[(a, b)]).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn floor_must_be_positive() {
        let reg = rc_regression();
        let data = records(2, vec![0.0, 0.0]);
        let rule = gh(2);
        assert!(MalProblem::new(&reg, &data, &rule)
            .unwrap()
            .with_floor(0.0)
            .is_err());
    }

    // Independent scalar Newton on the closed-form logit likelihood.
    fn logit_oracle(z: &[f64]) -> f64 {
        let mut mu = 0.0;
        for _ in 0..100 {
            let (mut g, mut h) = (0.0, 0.0);
            for &zi in z {
                let p = 1.0 / (1.0 + (-zi * mu).exp());
                g += zi * (1.0 - p);
                h -= zi * zi * p * (1.0 - p);
            }
            let step = g / h;
            mu -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        mu
    }

    #[test]
    fn pinned_spread_reduces_to_plain_logit() {
        let logit = mixed_logit_1d()
            .with_theta_box(ThetaBox::new(vec![-10.0, 0.0], vec![10.0, 0.0]).unwrap())
            .unwrap();
        let rule = gh(8);
        for seed in 0..3 {
            let data = generate_dataset(Dgp::MixedLogit1d, 200, seed, &[0.5, 0.0]).unwrap();
            let prob = MalProblem::new(&logit, &data, &rule).unwrap();
            let est = maximize(&prob, &[0.0, 0.0], &MaximizeOptions::default()).unwrap();
            let z: Vec<f64> = data.records().map(|r| r[0]).collect();
            assert!(est.converged);
            assert!((est.theta_hat[0] - logit_oracle(&z)).abs() < 1e-8);
            assert_eq!(est.theta_hat[1], 0.0);
            assert_eq!(est.std_errors[1], 0.0);
            assert!(est.std_errors[0].is_finite() && est.std_errors[0] > 0.0);
        }
    }

    #[test]
    fn restart_at_optimum_is_stationary() {
        let logit = mixed_logit_1d();
        let data = generate_dataset(Dgp::MixedLogit1d, 400, 5, &[0.5, 1.0]).unwrap();
        let rule = gh(20);
        let prob = MalProblem::new(&logit, &data, &rule).unwrap();
        let first = maximize(&prob, &[0.0, 1.0], &MaximizeOptions::default()).unwrap();
        assert!(first.converged);
        let again = maximize(&prob, &first.theta_hat, &MaximizeOptions::default()).unwrap();
        assert!(again.converged && again.iterations <= 2);
        for (a, b) in first.theta_hat.iter().zip(&again.theta_hat) {
            assert!((a - b).abs() < 1e-10);
        }
        let info = &first.observed_information;
        assert!((info[0][1] - info[1][0]).abs() < 1e-9 * info[0][1].abs().max(1.0));
    }

    #[test]
    fn accepted_iterations_never_decrease_the_objective() {
        let bm = butler_moffitt(4).unwrap();
        let data = generate_dataset(Dgp::ButlerMoffitt(4), 300, 6, &[1.0, 0.5]).unwrap();
        let rule = gh(16);
        let prob = MalProblem::new(&bm, &data, &rule).unwrap();
        let est = maximize(&prob, &[3.0, -2.0], &MaximizeOptions::default()).unwrap();
        assert!(est.converged);
        let start = prob.loglik(&[3.0, -2.0]).unwrap().value;
        let mut prev = start;
        for t in &est.trace {
            assert!(t.loglik >= prev - 1e-14);
            prev = t.loglik;
        }
        assert!(est.score_norm <= 1e-8);
    }

    #[test]
    fn hermite_estimates_form_a_cauchy_sequence() {
        let reg = rc_regression();
        let data = generate_dataset(Dgp::RcRegression, 500, 12, &[0.0]).unwrap();
        let fit = |r: usize| {
            let rule = gh(r);
            let prob = MalProblem::new(&reg, &data, &rule).unwrap();
            let est = maximize(&prob, &[0.0], &MaximizeOptions::default()).unwrap();
            assert!(est.converged);
            if r >= 4 {
                assert_eq!(est.floor_activations_total, 0);
            }
            est.theta_hat[0]
        };
        let thetas: Vec<f64> = [2, 4, 8, 16, 32].iter().map(|&r| fit(r)).collect();
        let gaps: Vec<f64> = thetas.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        for w in gaps.windows(2) {
            assert!(w[1] < w[0], "{gaps:?}");
        }
    }
}
