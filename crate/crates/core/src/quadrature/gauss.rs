//! Gaussian quadrature via the Golub-Welsch eigenvalue approach.
//!
//! Nodes are the eigenvalues of the symmetric tridiagonal Jacobi matrix of the
//! orthonormal polynomial family, found by implicit-shift QL. Each node is then
//! polished by Newton steps on the three-term recurrence and its weight taken
//! as the Christoffel number `1 / Σ_k p_k(x)²`, which keeps full relative
//! accuracy in the far tails where first eigenvector components do not.

use super::{Rule1d, WeightKind};
use crate::special::probit;
use crate::{Error, Real, Result};

const MAX_QL_ITERATIONS: usize = 50;
const NEWTON_POLISH_STEPS: usize = 2;

/// Orthonormal family described by its Jacobi off-diagonals (zero diagonal).
trait SymmetricFamily<T: Real> {
    /// Coupling between degrees `k - 1` and `k`, `k >= 1`.
    fn beta(&self, k: usize) -> T;
    /// Total mass of the weight function.
    fn mass(&self) -> T;
}

struct Hermite;

impl<T: Real> SymmetricFamily<T> for Hermite {
    fn beta(&self, k: usize) -> T {
        T::from_usize_lossy(k).sqrt()
    }
    fn mass(&self) -> T {
        T::one()
    }
}

struct Legendre;

impl<T: Real> SymmetricFamily<T> for Legendre {
    fn beta(&self, k: usize) -> T {
        let k = T::from_usize_lossy(k);
        k / (T::c(4.0) * k * k - T::one()).sqrt()
    }
    fn mass(&self) -> T {
        T::c(2.0)
    }
}

/// Gauss-Hermite rule for the standard normal density (probabilists'
/// normalization): exact for polynomials of degree `<= 2r - 1`.
pub fn gauss_hermite<T: Real>(r: usize) -> Result<Rule1d<T>> {
    if r == 0 {
        return Err(Error::invalid("gauss_hermite needs r >= 1"));
    }
    let (nodes, weights) = symmetric_gauss_rule::<T, _>(&Hermite, r)?;
    Ok(Rule1d::from_parts(
        nodes,
        weights,
        WeightKind::GaussianDensity,
    ))
}

/// Gauss-Legendre rule on `[a, b]`; weights sum to `b - a`.
pub fn gauss_legendre<T: Real>(r: usize, a: f64, b: f64) -> Result<Rule1d<T>> {
    if r == 0 {
        return Err(Error::invalid("gauss_legendre needs r >= 1"));
    }
    check_interval(a, b)?;
    let (nodes, weights) = symmetric_gauss_rule::<T, _>(&Legendre, r)?;
    let half = T::c(0.5 * (b - a));
    let mid = T::c(0.5 * (a + b));
    Ok(Rule1d::from_parts(
        nodes.into_iter().map(|x| mid + half * x).collect(),
        weights.into_iter().map(|w| half * w).collect(),
        WeightKind::LebesgueOnInterval { a, b },
    ))
}

/// Composite midpoint rule: `r` equal cells of `[a, b]`.
pub fn midpoint<T: Real>(r: usize, a: f64, b: f64) -> Result<Rule1d<T>> {
    if r == 0 {
        return Err(Error::invalid("midpoint needs r >= 1"));
    }
    check_interval(a, b)?;
    let h = (b - a) / r as f64;
    let nodes = (0..r).map(|i| T::c(a + (i as f64 + 0.5) * h)).collect();
    let weights = vec![T::c(h); r];
    Ok(Rule1d::from_parts(
        nodes,
        weights,
        WeightKind::LebesgueOnInterval { a, b },
    ))
}

/// Carries a rule on `(0, 1)` to the Gaussian weight: nodes go through the
/// inverse normal distribution function, weights are kept.
pub fn unit_to_gaussian<T: Real>(rule: &Rule1d<T>) -> Result<Rule1d<T>> {
    match rule.weight_kind() {
        WeightKind::LebesgueOnInterval { a, b } if a == 0.0 && b == 1.0 => {}
        other => {
            return Err(Error::invalid(format!(
                "only rules on (0, 1) can be mapped to the Gaussian weight, got {other:?}"
            )))
        }
    }
    let nodes = rule
        .nodes()
        .iter()
        .map(|&u| T::c(probit(u.as_f64())))
        .collect();
    Ok(Rule1d::from_parts(
        nodes,
        rule.weights().to_vec(),
        WeightKind::GaussianDensity,
    ))
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid(format!(
            "interval needs a < b, got [{a}, {b}]"
        )));
    }
    Ok(())
}

fn symmetric_gauss_rule<T: Real, F: SymmetricFamily<T>>(
    family: &F,
    r: usize,
) -> Result<(Vec<T>, Vec<T>)> {
    let mut diag = vec![T::zero(); r];
    let mut off = vec![T::zero(); r];
    for k in 1..r {
        off[k - 1] = family.beta(k);
    }
    tridiagonal_eigenvalues(&mut diag, &mut off)?;
    let mut nodes = diag;
    nodes.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));

    for x in nodes.iter_mut() {
        for _ in 0..NEWTON_POLISH_STEPS {
            let s = recurrence_sweep(family, r, *x);
            if s.deriv != T::zero() {
                let step = s.p_r / s.deriv;
                if step.is_finite() {
                    *x = *x - step;
                }
            }
        }
    }

    let mut weights: Vec<T> = nodes
        .iter()
        .map(|&x| recurrence_sweep(family, r, x).christoffel())
        .collect();

    // Zero-diagonal Jacobi matrices give rules symmetric about the origin.
    let two = T::c(2.0);
    for j in 0..r / 2 {
        let k = r - 1 - j;
        let x = (nodes[k] - nodes[j]) / two;
        let w = (weights[j] + weights[k]) / two;
        nodes[j] = -x;
        nodes[k] = x;
        weights[j] = w;
        weights[k] = w;
    }
    if r % 2 == 1 {
        nodes[r / 2] = T::zero();
    }
    Ok((nodes, weights))
}

struct Sweep<T> {
    p_r: T,
    deriv: T,
    sum_sq: T,
    rescales: i32,
}

impl<T: Real> Sweep<T> {
    fn christoffel(&self) -> T {
        if self.rescales == 0 {
            T::one() / self.sum_sq
        } else {
            let factor = rescale_factor::<T>();
            (T::one() / self.sum_sq) * (factor * factor).powi(-self.rescales)
        }
    }
}

fn rescale_factor<T: Real>() -> T {
    T::max_value().sqrt().sqrt()
}

// Evaluates the orthonormal p_r(x), p_r'(x) and Σ_{k<r} p_k(x)², rescaling to
// stay in range. Ratios are unaffected by the rescaling.
fn recurrence_sweep<T: Real, F: SymmetricFamily<T>>(family: &F, r: usize, x: T) -> Sweep<T> {
    let mass = family.mass();
    let big = rescale_factor::<T>();
    let mut p_prev = T::zero();
    let mut p = T::one() / mass.sqrt();
    let mut d_prev = T::zero();
    let mut d = T::zero();
    let mut sum_sq = T::zero();
    let mut rescales = 0;
    let mut beta_k = T::zero();
    for k in 0..r {
        sum_sq = sum_sq + p * p;
        let beta_next = family.beta(k + 1);
        let p_next = (x * p - beta_k * p_prev) / beta_next;
        let d_next = (p + x * d - beta_k * d_prev) / beta_next;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
        beta_k = beta_next;
        if p.abs() > big || d.abs() > big {
            p = p / big;
            p_prev = p_prev / big;
            d = d / big;
            d_prev = d_prev / big;
            sum_sq = sum_sq / (big * big);
            rescales += 1;
        }
    }
    Sweep {
        p_r: p,
        deriv: d,
        sum_sq,
        rescales,
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL.
///
/// `diag` holds the diagonal and receives the eigenvalues (unsorted);
/// `off[i]` couples rows `i` and `i + 1`, `off[n - 1]` is scratch.
fn tridiagonal_eigenvalues<T: Real>(diag: &mut [T], off: &mut [T]) -> Result<()> {
    let n = diag.len();
    let eps = T::epsilon();
    let two = T::c(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= eps * dd || off[m].abs() <= T::min_positive_value() {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::NumericFailure(format!(
                    "tridiagonal QL did not converge for eigenvalue {l} in {MAX_QL_ITERATIONS} iterations"
                )));
            }
            let mut g = (diag[l + 1] - diag[l]) / (two * off[l]);
            let mut rad = g.hypot(T::one());
            let signed = if g >= T::zero() { rad } else { -rad };
            g = diag[m] - diag[l] + off[l] / (g + signed);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                rad = f.hypot(g);
                off[i + 1] = rad;
                if rad == T::zero() {
                    diag[i + 1] = diag[i + 1] - p;
                    off[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / rad;
                c = g / rad;
                g = diag[i + 1] - p;
                rad = (diag[i] - g) * s + two * c * b;
                p = s * rad;
                diag[i + 1] = g + p;
                g = c * rad - b;
            }
            if underflow {
                continue;
            }
            diag[l] = diag[l] - p;
            off[l] = g;
            off[m] = T::zero();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial(k: usize) -> f64 {
        (1..=k).rev().step_by(2).map(|x| x as f64).product()
    }

    #[test]
    fn hermite_small_rules() {
        let r1 = gauss_hermite::<f64>(1).unwrap();
        assert_eq!(r1.nodes(), &[0.0]);
        assert!((r1.weights()[0] - 1.0).abs() < 1e-15);

        // moment equations m0 = 1, m2 = 1
        let r2 = gauss_hermite::<f64>(2).unwrap();
        assert!((r2.nodes()[0] + 1.0).abs() < 1e-15 && (r2.nodes()[1] - 1.0).abs() < 1e-15);
        assert!(r2.weights().iter().all(|w| (w - 0.5).abs() < 1e-15));

        // moment equations up to degree 5
        let r3 = gauss_hermite::<f64>(3).unwrap();
        let s3 = 3f64.sqrt();
        assert!((r3.nodes()[0] + s3).abs() < 1e-14 && r3.nodes()[1] == 0.0);
        assert!((r3.nodes()[2] - s3).abs() < 1e-14);
        assert!((r3.weights()[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((r3.weights()[1] - 2.0 / 3.0).abs() < 1e-15);
        let m4: f64 = r3
            .nodes()
            .iter()
            .zip(r3.weights())
            .map(|(x, w)| w * x.powi(4))
            .sum();
        assert!((m4 - 3.0).abs() < 1e-13);
    }

    #[test]
    fn hermite_exact_on_normal_moments() {
        for r in 1..=30 {
            let rule = gauss_hermite::<f64>(r).unwrap();
            for k in 0..2 * r {
                let got = rule.apply(|v| v.powi(k as i32)).unwrap();
                let scale = rule.apply(|v| v.abs().powi(k as i32)).unwrap();
                if k % 2 == 1 {
                    assert!(got.abs() <= 1e-10 * scale.max(1.0), "r={r} k={k}: {got}");
                } else {
                    let exact = double_factorial(k.saturating_sub(1));
                    assert!(
                        ((got - exact) / exact).abs() <= 1e-10,
                        "r={r} k={k}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn hermite_symmetry_and_positivity() {
        for r in [4, 7, 30, 101] {
            let rule = gauss_hermite::<f64>(r).unwrap();
            let (x, w) = (rule.nodes(), rule.weights());
            for j in 0..r {
                assert!((x[j] + x[r - 1 - j]).abs() <= 1e-12);
                assert!((w[j] - w[r - 1 - j]).abs() <= 1e-12);
                assert!(w[j] > 0.0);
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            let mass: f64 = w.iter().sum();
            assert!((mass - 1.0).abs() <= 1e-12, "r={r}: {mass}");
        }
    }

    #[test]
    fn large_hermite_rule_keeps_unit_mass() {
        let rule = gauss_hermite::<f64>(2048).unwrap();
        let mass: f64 = rule.weights().iter().sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(rule.weights().iter().all(|w| w.is_finite() && *w >= 0.0));
        assert!((rule.apply(|v| v * v).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn legendre_small_rules() {
        let r1 = gauss_legendre::<f64>(1, -1.0, 1.0).unwrap();
        assert_eq!(r1.nodes(), &[0.0]);
        assert!((r1.weights()[0] - 2.0).abs() < 1e-15);

        let r2 = gauss_legendre::<f64>(2, -1.0, 1.0).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert!((r2.nodes()[0] + x).abs() < 1e-15 && (r2.nodes()[1] - x).abs() < 1e-15);
        assert!(r2.weights().iter().all(|w| (w - 1.0).abs() < 1e-14));

        let u = gauss_legendre::<f64>(2, 0.0, 1.0).unwrap();
        assert!((u.nodes()[0] - (1.0 - x) / 2.0).abs() < 1e-15);
        assert!((u.nodes()[1] - (1.0 + x) / 2.0).abs() < 1e-15);
        assert!(u.weights().iter().all(|w| (w - 0.5).abs() < 1e-15));
    }

    #[test]
    fn legendre_exact_on_monomials() {
        let (a, b) = (-0.5_f64, 2.0_f64);
        for r in 1..=30 {
            let rule = gauss_legendre::<f64>(r, a, b).unwrap();
            for k in 0..2 * r {
                let kp = (k + 1) as f64;
                let exact = (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / kp;
                let got = rule.apply(|v| v.powi(k as i32)).unwrap();
                assert!(((got - exact) / exact).abs() <= 1e-10, "r={r} k={k}");
            }
        }
    }

    #[test]
    fn interval_errors() {
        assert!(matches!(
            gauss_legendre::<f64>(3, 1.0, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            midpoint::<f64>(3, 2.0, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            gauss_hermite::<f64>(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn midpoint_cells() {
        let m = midpoint::<f64>(1, 0.0, 1.0).unwrap();
        assert_eq!((m.nodes(), m.weights()), (&[0.5][..], &[1.0][..]));
        let m = midpoint::<f64>(2, 0.0, 1.0).unwrap();
        assert_eq!(
            (m.nodes(), m.weights()),
            (&[0.25, 0.75][..], &[0.5, 0.5][..])
        );
        let m = midpoint::<f64>(4, -1.0, 1.0).unwrap();
        assert_eq!(m.nodes(), &[-0.75, -0.25, 0.25, 0.75]);
        assert!(m.weights().iter().all(|&w| w == 0.5));
    }

    #[test]
    fn mapped_legendre_is_a_gaussian_rule() {
        let gl = gauss_legendre::<f64>(64, 0.0, 1.0).unwrap();
        let mapped = unit_to_gaussian(&gl).unwrap();
        assert_eq!(mapped.weight_kind(), WeightKind::GaussianDensity);
        assert!((mapped.apply(|_| 1.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((mapped.apply(|v| v * v).unwrap() - 1.0).abs() < 1e-2);
        let off = gauss_legendre::<f64>(4, -1.0, 1.0).unwrap();
        assert!(unit_to_gaussian(&off).is_err());
    }

    #[test]
    fn single_precision_rules() {
        let rule = gauss_hermite::<f32>(8).unwrap();
        let m4 = rule.apply(|v| v.powi(4)).unwrap();
        assert!((m4 - 3.0).abs() < 1e-4);
        let gl = gauss_legendre::<f32>(5, 0.0, 1.0).unwrap();
        assert!((gl.apply(|v| v * v).unwrap() - 1.0 / 3.0).abs() < 1e-6);
    }
}
