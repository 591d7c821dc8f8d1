//! Binomial, beta and beta-binomial distribution functions with the
//! inversions the calibrators are built on.

mod beta;
mod betabin;
mod binomial;
pub mod special;

pub use beta::beta_reg;
pub use beta::beta_quantile;
pub use betabin::{betabin_cdf, betabin_quantile, BetaBinomial};
pub use binomial::{binom_cdf, binom_inf_p, binom_sup_k};

pub(crate) use beta::beta_reg_unchecked;
pub(crate) use binomial::{cdf_unchecked as binom_cdf_unchecked, sup_k_unchecked};

use crate::error::{Error, Result};
use serde::Serialize;

/// Shape parameters of a beta law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain {
                    name,
                    value: v,
                    expected: "(0, inf)",
                });
            }
        }
        Ok(Self { a, b })
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn variance(&self) -> f64 {
        let s = self.a + self.b;
        self.a * self.b / (s * s * (s + 1.0))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        beta_reg_unchecked(x.clamp(0.0, 1.0), self.a, self.b)
    }
}

/// Beta-binomial law: `trials` Bernoulli draws sharing a `Beta(a, b)` rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaBinParams {
    pub trials: u64,
    pub a: f64,
    pub b: f64,
}

impl BetaBinParams {
    pub fn new(trials: u64, a: f64, b: f64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::Invalid("beta-binomial needs at least one trial".into()));
        }
        let law = BetaParams::new(a, b)?;
        Ok(Self::from_law(trials, law))
    }

    pub fn from_law(trials: u64, law: BetaParams) -> Self {
        Self {
            trials,
            a: law.a,
            b: law.b,
        }
    }
}

/// Result of `sup{k : Bin(k; n, eps) <= delta}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SupK {
    Value(u64),
    /// The defining set is empty: even `Bin(0; n, eps) > delta`.
    Infeasible,
}

impl SupK {
    pub fn value(self) -> Option<u64> {
        match self {
            SupK::Value(k) => Some(k),
            SupK::Infeasible => None,
        }
    }

    /// Lookup-table convention, where an empty set
    /// shows as 0.
    pub fn or_zero(self) -> u64 {
        self.value().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(BetaParams::new(0.0, 1.0).is_err());
        assert!(BetaParams::new(1.0, -2.0).is_err());
        assert!(BetaParams::new(1.0, f64::NAN).is_err());
        assert!(BetaBinParams::new(0, 1.0, 1.0).is_err());
        let p = BetaParams::new(9.0, 1.0).unwrap();
        assert!((p.mean() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn identity_grid() {
        // Beta(1-p; m+1-k, k) = Bin(k-1; m, p)
        for m in 1..=30u64 {
            for k in 1..=m {
                for &p in &[0.01, 0.1, 0.3, 0.5, 0.8, 0.99] {
                    let lhs = beta_reg(1.0 - p, BetaParams::new((m + 1 - k) as f64, k as f64).unwrap()).unwrap();
                    let rhs = binom_cdf(k as i64 - 1, m, p).unwrap();
                    assert!((lhs - rhs).abs() < 1e-10, "m={m} k={k} p={p}");
                }
            }
        }
    }
}
