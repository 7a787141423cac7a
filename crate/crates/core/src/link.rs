//! Link functions `R(n)`: how many integration points to spend per
//! observation at sample size `n`.
//!
//! The algebraic and exponential kinds are the sufficient choices for
//! `√n · E(R(n)) → 0` under error rates `c r^{-s}` and `c exp(-α r^β)`;
//! both need `γ > 1/2`. The remaining kinds are plain scalings of
//! `1, log n, √n, n`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkFunction {
    Constant {
        r0: u64,
    },
    Logarithmic {
        a: f64,
    },
    Sqrt {
        a: f64,
    },
    Linear {
        a: f64,
    },
    Algebraic {
        c: f64,
        s: f64,
        gamma: f64,
    },
    Exponential {
        c: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
    },
}

impl LinkFunction {
    pub fn algebraic(c: f64, s: f64, gamma: f64) -> Result<Self> {
        let link = LinkFunction::Algebraic { c, s, gamma };
        link.validate()?;
        Ok(link)
    }

    pub fn exponential(c: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let link = LinkFunction::Exponential {
            c,
            alpha,
            beta,
            gamma,
        };
        link.validate()?;
        Ok(link)
    }

    /// Short label for reports, e.g. `log(a=6)`.
    pub fn label(&self) -> String {
        match *self {
            LinkFunction::Constant { r0 } => format!("constant(r0={r0})"),
            LinkFunction::Logarithmic { a } => format!("log(a={a})"),
            LinkFunction::Sqrt { a } => format!("sqrt(a={a})"),
            LinkFunction::Linear { a } => format!("linear(a={a})"),
            LinkFunction::Algebraic { c, s, gamma } => {
                format!("algebraic(c={c},s={s},gamma={gamma})")
            }
            LinkFunction::Exponential {
                c,
                alpha,
                beta,
                gamma,
            } => format!("exponential(c={c},alpha={alpha},beta={beta},gamma={gamma})"),
        }
    }

    /// Short kind name (`constant`, `logarithmic`, ...).
    pub fn kind(&self) -> &'static str {
        match self {
            LinkFunction::Constant { .. } => "constant",
            LinkFunction::Logarithmic { .. } => "logarithmic",
            LinkFunction::Sqrt { .. } => "sqrt",
            LinkFunction::Linear { .. } => "linear",
            LinkFunction::Algebraic { .. } => "algebraic",
            LinkFunction::Exponential { .. } => "exponential",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "link parameter {name} must be positive, got {x}"
                )))
            }
        };
        let gamma_ok = |gamma: f64| {
            if gamma > 0.5 && gamma.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "link needs gamma > 1/2, got {gamma}"
                )))
            }
        };
        match *self {
            LinkFunction::Constant { r0 } => {
                if r0 == 0 {
                    return Err(Error::config("constant link needs r0 >= 1"));
                }
                Ok(())
            }
            LinkFunction::Logarithmic { a }
            | LinkFunction::Sqrt { a }
            | LinkFunction::Linear { a } => positive("a", a),
            LinkFunction::Algebraic { c, s, gamma } => {
                positive("c", c)?;
                positive("s", s)?;
                gamma_ok(gamma)
            }
            LinkFunction::Exponential {
                c,
                alpha,
                beta,
                gamma,
            } => {
                positive("c", c)?;
                positive("alpha", alpha)?;
                positive("beta", beta)?;
                gamma_ok(gamma)
            }
        }
    }

    /// Rule size `R(n)`, never below 1.
    pub fn evaluate(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::invalid("link functions are defined for n >= 1"));
        }
        self.validate()?;
        let nf = n as f64;
        let raw = match *self {
            LinkFunction::Constant { r0 } => return Ok(r0),
            LinkFunction::Logarithmic { a } => a * nf.ln(),
            LinkFunction::Sqrt { a } => a * nf.sqrt(),
            LinkFunction::Linear { a } => a * nf,
            LinkFunction::Algebraic { c, s, gamma } => c.powf(1.0 / s) * nf.powf(gamma / s),
            LinkFunction::Exponential {
                c,
                alpha,
                beta,
                gamma,
            } => {
                let base = c.ln() / alpha + gamma / alpha * nf.ln();
                if base <= 0.0 {
                    0.0
                } else {
                    base.powf(1.0 / beta)
                }
            }
        };
        Ok((raw.ceil() as u64).max(1))
    }

    /// Integrand evaluations for one evaluation of the approximated
    /// log-likelihood: `n · R(n)`.
    pub fn total_cost(&self, n: u64) -> Result<u128> {
        Ok(n as u128 * self.evaluate(n)? as u128)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebraic_link_by_hand() {
        let link = LinkFunction::algebraic(1.0, 2.0, 0.6).unwrap();
        assert_eq!(link.evaluate(10_000).unwrap(), 16);
    }

    #[test]
    fn exponential_link_by_hand() {
        let link = LinkFunction::exponential(1.0, 1.0, 1.0, 0.6).unwrap();
        // log(22026) = 9.99998, 0.6 * that just under 6
        assert_eq!(link.evaluate(22_026).unwrap(), 6);
        // ⌈e¹⁰⌉ = 22027 already pushes 0.6 log n past 6
        assert_eq!(link.evaluate(22_027).unwrap(), 7);
    }

    #[test]
    fn constant_and_floor() {
        let c = LinkFunction::Constant { r0: 8 };
        assert!([1, 10, 1_000_000]
            .iter()
            .all(|&n| c.evaluate(n).unwrap() == 8));
        let log = LinkFunction::Logarithmic { a: 1.0 };
        assert_eq!(log.evaluate(1).unwrap(), 1);
        assert!(log.evaluate(0).is_err());
    }

    #[test]
    fn gamma_must_exceed_one_half() {
        assert!(matches!(
            LinkFunction::algebraic(1.0, 2.0, 0.5),
            Err(Error::InvalidConfiguration(_))
        ));
        assert!(LinkFunction::exponential(1.0, 1.0, 1.0, 0.4).is_err());
        let sneaky = LinkFunction::Algebraic {
            c: 1.0,
            s: 2.0,
            gamma: 0.3,
        };
        assert!(sneaky.evaluate(10).is_err());
    }

    #[test]
    fn monotone_in_n() {
        let links = [
            LinkFunction::Constant { r0: 3 },
            LinkFunction::Logarithmic { a: 2.5 },
            LinkFunction::Sqrt { a: 0.7 },
            LinkFunction::Linear { a: 0.01 },
            LinkFunction::algebraic(2.0, 1.5, 0.6).unwrap(),
            LinkFunction::exponential(3.0, 0.5, 0.5, 0.7).unwrap(),
        ];
        for link in links {
            let mut prev = 0;
            for n in 1..=1_000_000u64 {
                let r = link.evaluate(n).unwrap();
                assert!(r >= prev && r >= 1, "{} at n={n}", link.label());
                prev = r;
            }
        }
    }

    #[test]
    fn cost_matches_table_rows() {
        let linear = LinkFunction::Linear { a: 1.0 };
        assert_eq!(linear.total_cost(1000).unwrap(), 1_000_000);

        // s = 2, gamma just above 1/2: cost ≈ n^{5/4}
        let alg = LinkFunction::algebraic(1.0, 2.0, 0.5 + 1e-9).unwrap();
        for n in [1e4 as u64, 1e6 as u64] {
            let ratio = alg.total_cost(n).unwrap() as f64 / (n as f64).powf(1.25);
            assert!(
                (1.0..1.0 + 2.0 / (n as f64).powf(0.25)).contains(&ratio),
                "{ratio}"
            );
        }

        // alpha = beta = 1: cost ≈ gamma n log n
        let exp = LinkFunction::exponential(1.0, 1.0, 1.0, 0.6).unwrap();
        for n in [1e4 as u64, 1e6 as u64] {
            let nf = n as f64;
            let ratio = exp.total_cost(n).unwrap() as f64 / (0.6 * nf * nf.ln());
            assert!(
                (1.0..1.0 + 1.0 / (0.6 * nf.ln())).contains(&ratio),
                "{ratio}"
            );
        }
    }

    #[test]
    fn json_fragment() {
        let link: LinkFunction =
            serde_json::from_str(r#"{"kind":"algebraic","c":1,"s":2,"gamma":0.6}"#).unwrap();
        assert_eq!(link, LinkFunction::algebraic(1.0, 2.0, 0.6).unwrap());
        let back = serde_json::to_string(&link).unwrap();
        assert_eq!(serde_json::from_str::<LinkFunction>(&back).unwrap(), link);
    }
}
