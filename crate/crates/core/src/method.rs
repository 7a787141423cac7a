//! Named rule families and compact rule specifications such as `gh:16` or
//! `mc:1000:42`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::quadrature::{
    gauss_hermite, gauss_legendre, halton, midpoint, mlhs, monte_carlo_gaussian, product_rule,
    unit_to_gaussian,
};
use crate::sparse_grid::{smolyak, SparseGridSpec};
use crate::{Error, Result, RuleND};

/// Rule family under the standard Gaussian weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    /// Pseudo-random draws.
    Mc,
    /// Plain Halton sequence, skip 1.
    Halton,
    /// Modified Latin hypercube sampling.
    Mlhs,
    /// Gauss-Hermite (tensor product for `d > 1`).
    Gh,
    /// Gauss-Legendre on `(0, 1)` composed with the inverse normal cdf.
    Gl,
    /// Midpoint rule on `(0, 1)` composed with the inverse normal cdf.
    Midpoint,
    /// Smolyak grid of Gauss-Hermite rules; the size argument is the level.
    Sparse,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Mc,
        Method::Halton,
        Method::Mlhs,
        Method::Gh,
        Method::Gl,
        Method::Midpoint,
        Method::Sparse,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Halton => "halton",
            Method::Mlhs => "mlhs",
            Method::Gh => "gh",
            Method::Gl => "gl",
            Method::Midpoint => "midpoint",
            Method::Sparse => "sparse",
        }
    }

    /// Rule depends on the seed.
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Method::Mc | Method::Mlhs)
    }

    /// Builds the `d`-dimensional rule of size (or level, for sparse) `r`.
    pub fn build(&self, r: usize, d: usize, seed: u64) -> Result<RuleND> {
        match self {
            Method::Mc => monte_carlo_gaussian(r, d, seed),
            Method::Halton => halton(r, d, 1),
            Method::Mlhs => mlhs(r, d, seed),
            Method::Gh => product_rule(&gauss_hermite(r)?, d),
            Method::Gl => product_rule(&unit_to_gaussian(&gauss_legendre(r, 0.0, 1.0)?)?, d),
            Method::Midpoint => product_rule(&unit_to_gaussian(&midpoint(r, 0.0, 1.0)?)?, d),
            Method::Sparse => smolyak(&SparseGridSpec::new(d, r)?),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" | "monte_carlo" => Ok(Method::Mc),
            "halton" => Ok(Method::Halton),
            "mlhs" => Ok(Method::Mlhs),
            "gh" | "hermite" | "gauss_hermite" => Ok(Method::Gh),
            "gl" | "legendre" | "gauss_legendre" => Ok(Method::Gl),
            "midpoint" => Ok(Method::Midpoint),
            "sparse" | "smolyak" => Ok(Method::Sparse),
            other => Err(Error::invalid(format!("unknown rule family '{other}'"))),
        }
    }
}

impl TryFrom<String> for Method {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.label().to_string()
    }
}

/// A family together with its size and seed, written `family:r[:seed]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub method: Method,
    pub r: usize,
    pub seed: u64,
}

impl RuleSpec {
    pub fn new(method: Method, r: usize) -> Self {
        Self { method, r, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn build(&self, d: usize) -> Result<RuleND> {
        self.method.build(self.r, d, self.seed)
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.method.is_stochastic() {
            write!(f, "{}:{}:{}", self.method, self.r, self.seed)
        } else {
            write!(f, "{}:{}", self.method, self.r)
        }
    }
}

impl FromStr for RuleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let method: Method = parts.next().unwrap_or_default().parse()?;
        let bad = || Error::invalid(format!("rule spec '{s}' is not family:r[:seed]"));
        let r = parts
            .next()
            .and_then(|x| x.trim().parse().ok())
            .filter(|&r: &usize| r >= 1)
            .ok_or_else(bad)?;
        let seed = match parts.next() {
            Some(x) => x.trim().parse().map_err(|_| bad())?,
            None => 0,
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Self { method, r, seed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let s: RuleSpec = "gh:16".parse().unwrap();
        assert_eq!(s, RuleSpec::new(Method::Gh, 16));
        assert_eq!(s.to_string(), "gh:16");
        let m: RuleSpec = "mc:1000:42".parse().unwrap();
        assert_eq!(m.seed, 42);
        assert_eq!(m.to_string(), "mc:1000:42");
        for bad in ["gh", "gh:0", "foo:3", "mc:3:x", "gh:3:1:2"] {
            assert!(bad.parse::<RuleSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn every_family_has_unit_mass() {
        for m in Method::ALL {
            let r = if m == Method::Sparse { 3 } else { 9 };
            let rule = m.build(r, 2, 5).unwrap();
            assert!((rule.weight_sum() - 1.0).abs() < 1e-10, "{m}");
            assert_eq!(rule.d(), 2);
        }
    }
}
