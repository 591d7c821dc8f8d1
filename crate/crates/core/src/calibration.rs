//! Split conformal calibrators.
//!
//! Given `n` calibration scores, the prediction set `{y : r(x, y) <= λ̂}`
//! takes `λ̂` as an order statistic of the scores:
//!
//! * marginal coverage at level `α` uses the `⌈(1-α)(n+1)⌉`-th smallest score;
//! * an `(ε, δ)` tolerance region uses the `(n - k*)`-th smallest score, with
//!   `k* = sup{k : Bin(k; n, ε) <= δ}`.
//!
//! Index `n + 1` stands for the sentinel `r_(n+1) = +∞`, i.e. the full label
//! space. Both calibrators are the same order statistic for suitable levels,
//! and the conversion functions below map one guarantee to the other.
//!
//! With almost surely distinct scores the coverage conditional on the
//! calibration set is exactly `Beta(index, n + 1 - index)`; with ties it
//! stochastically dominates that law. [`CalibrationResult::law`] carries it
//! either way.

use crate::dists::{self, BetaParams, SupK};
use crate::error::{check_unit_open, Error, Result};
use crate::levels::{complement_ceil, scaled_floor};
use serde::Serialize;

/// Calibration scores, sorted ascending on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NonconformityScores {
    values: Vec<f64>,
}

impl NonconformityScores {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyScores);
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Invalid(format!("score {i} is NaN")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.values
    }

    /// `r_(i)` with the sentinels `r_(0) = -∞` and `r_(n+1) = +∞`.
    pub fn order_stat(&self, i: u64) -> f64 {
        let n = self.values.len() as u64;
        match i {
            0 => f64::NEG_INFINITY,
            i if i > n => f64::INFINITY,
            i => self.values[(i - 1) as usize],
        }
    }

    /// Number of scores `<= lam`.
    pub fn count_at_most(&self, lam: f64) -> usize {
        self.values.partition_point(|&v| v <= lam)
    }
}

/// Requested validity guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetGuarantee {
    /// `P[Y ∈ S(X)] >= 1 - α` over calibration and test draw.
    Marginal { alpha: f64 },
    /// With probability `>= 1 - δ` over calibration draws, coverage `>= 1 - ε`.
    Tolerance { eps: f64, delta: f64 },
}

impl TargetGuarantee {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TargetGuarantee::Marginal { alpha } => check_unit_open("alpha", alpha),
            TargetGuarantee::Tolerance { eps, delta } => {
                check_unit_open("eps", eps)?;
                check_unit_open("delta", delta)
            }
        }
    }
}

/// Smallest marginal level reproducing a tolerance calibrator,
/// `α = (k* + 1)/(n + 1)` as an exact fraction.
///
/// When `k*` does not exist the calibrator returns the full label space and
/// `full_set` is set; `numerator/denominator` is then `1/(n+1)`, the
/// (exclusive) upper end of the levels for which the marginal calibrator
/// also returns the full set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualAlpha {
    pub numerator: u64,
    pub denominator: u64,
    pub full_set: bool,
}

impl DualAlpha {
    pub fn alpha(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    pub fn coverage(&self) -> f64 {
        1.0 - self.alpha()
    }
}

/// The guarantee implied on the other side of the duality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dual {
    /// For a tolerance calibration: the equivalent marginal level.
    Alpha(DualAlpha),
    /// For a marginal calibration: the tolerance pairs it certifies, available
    /// through [`Dual::eps_min`] and [`Dual::delta_min`].
    Tolerance { n: u64, alpha: f64 },
}

impl Dual {
    /// Smallest `ε` certified at confidence `1 - δ`.
    pub fn eps_min(&self, delta: f64) -> Option<Result<f64>> {
        match *self {
            Dual::Tolerance { n, alpha } => Some(tolerance_eps_given_alpha(n, alpha, delta)),
            Dual::Alpha(_) => None,
        }
    }

    /// Smallest `δ` certified for coverage `1 - ε`.
    pub fn delta_min(&self, eps: f64) -> Option<Result<f64>> {
        match *self {
            Dual::Tolerance { n, alpha } => Some(tolerance_delta_given_alpha(n, alpha, eps)),
            Dual::Alpha(_) => None,
        }
    }
}

/// `[1-α, 1-α+1/(n+1)]` and the exact coverage `1 - ⌊α(n+1)⌋/(n+1)` when
/// scores are distinct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalBounds {
    pub lo: f64,
    pub hi: f64,
    pub distinct_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub n: u64,
    pub lambda_hat: f64,
    /// 1-based order statistic; `n + 1` is the `+∞` sentinel.
    pub order_index: u64,
    /// `Beta(index, n + 1 - index)`; `None` when the index is the sentinel.
    pub law: Option<BetaParams>,
    pub dual: Dual,
    pub marginal_bounds: MarginalBounds,
}

impl CalibrationResult {
    pub fn is_full_set(&self) -> bool {
        self.order_index > self.n
    }
}

/// Order index the calibrator for `target` picks among `n` scores.
pub fn calibration_index(n: u64, target: TargetGuarantee) -> Result<u64> {
    target.validate()?;
    Ok(match target {
        TargetGuarantee::Marginal { alpha } => complement_ceil(alpha, n + 1) as u64,
        TargetGuarantee::Tolerance { eps, delta } => match dists::sup_k_unchecked(n, eps, delta) {
            SupK::Value(k) => n - k,
            SupK::Infeasible => n + 1,
        },
    })
}

/// `Beta(index, n + 1 - index)`, the coverage law of the `index`-th order
/// statistic; `None` for the sentinel.
pub fn law_for_index(n: u64, index: u64) -> Option<BetaParams> {
    (index >= 1 && index <= n).then(|| BetaParams {
        a: index as f64,
        b: (n + 1 - index) as f64,
    })
}

/// Marginal calibrator: the `⌈(1-α)(n+1)⌉`-th smallest score.
pub fn q_hat(scores: &NonconformityScores, alpha: f64) -> Result<CalibrationResult> {
    check_unit_open("alpha", alpha)?;
    let n = scores.len() as u64;
    let index = complement_ceil(alpha, n + 1) as u64;
    Ok(CalibrationResult {
        n,
        lambda_hat: scores.order_stat(index),
        order_index: index,
        law: law_for_index(n, index),
        dual: Dual::Tolerance { n, alpha },
        marginal_bounds: marginal_bounds(n, alpha)?,
    })
}

/// Tolerance calibrator: the `(n - k*)`-th smallest score with
/// `k* = sup{k : Bin(k; n, ε) <= δ}`, or `+∞` when no such `k` exists.
pub fn p_hat(scores: &NonconformityScores, eps: f64, delta: f64) -> Result<CalibrationResult> {
    check_unit_open("eps", eps)?;
    check_unit_open("delta", delta)?;
    let n = scores.len() as u64;
    let dual = alpha_given_tolerance(n, eps, delta)?;
    let index = match dists::sup_k_unchecked(n, eps, delta) {
        SupK::Value(k) => n - k,
        SupK::Infeasible => n + 1,
    };
    Ok(CalibrationResult {
        n,
        lambda_hat: scores.order_stat(index),
        order_index: index,
        law: law_for_index(n, index),
        dual: Dual::Alpha(dual),
        marginal_bounds: marginal_bounds(n, dual.alpha())?,
    })
}

pub fn calibrate(scores: &NonconformityScores, target: TargetGuarantee) -> Result<CalibrationResult> {
    match target {
        TargetGuarantee::Marginal { alpha } => q_hat(scores, alpha),
        TargetGuarantee::Tolerance { eps, delta } => p_hat(scores, eps, delta),
    }
}

/// Smallest `δ` for which the marginal calibrator at level `α` is an
/// `(ε, δ)` tolerance region: `Bin(⌊α(n+1) - 1⌋; n, ε)`.
pub fn tolerance_delta_given_alpha(n: u64, alpha: f64, eps: f64) -> Result<f64> {
    check_unit_open("alpha", alpha)?;
    check_unit_open("eps", eps)?;
    dists::binom_cdf(scaled_floor(alpha, n + 1) - 1, n, eps)
}

/// Smallest `ε` for which the marginal calibrator at level `α` is an
/// `(ε, δ)` tolerance region: `inf{p : Bin(⌊α(n+1) - 1⌋; n, p) <= δ}`.
pub fn tolerance_eps_given_alpha(n: u64, alpha: f64, delta: f64) -> Result<f64> {
    check_unit_open("alpha", alpha)?;
    dists::binom_inf_p(scaled_floor(alpha, n + 1) - 1, n, delta)
}

/// Smallest `α` whose marginal calibrator coincides with the `(ε, δ)`
/// tolerance calibrator.
pub fn alpha_given_tolerance(n: u64, eps: f64, delta: f64) -> Result<DualAlpha> {
    let sup = dists::binom_sup_k(n, eps, delta)?;
    Ok(match sup {
        SupK::Value(k) => DualAlpha {
            numerator: k + 1,
            denominator: n + 1,
            full_set: false,
        },
        SupK::Infeasible => DualAlpha {
            numerator: 1,
            denominator: n + 1,
            full_set: true,
        },
    })
}

pub fn marginal_bounds(n: u64, alpha: f64) -> Result<MarginalBounds> {
    check_unit_open("alpha", alpha)?;
    let m = (n + 1) as f64;
    Ok(MarginalBounds {
        lo: 1.0 - alpha,
        hi: 1.0 - alpha + 1.0 / m,
        distinct_mean: 1.0 - scaled_floor(alpha, n + 1) as f64 / m,
    })
}

/// Coverage law of the order-statistic interval `[Y_(r), Y_(s)]` of `n`
/// continuous draws: `Beta(s - r, n - s + r + 1)`.
pub fn wilks_interval_law(n: u64, r: u64, s: u64) -> Result<BetaParams> {
    if r >= s || s > n + 1 {
        return Err(Error::Invalid(format!("need 0 <= r < s <= n+1, got r={r}, s={s}, n={n}")));
    }
    if r == 0 && s == n + 1 {
        return Err(Error::Invalid("interval (-inf, +inf) carries no information".into()));
    }
    BetaParams::new((s - r) as f64, (n - s + r + 1) as f64)
}

/// Whether `[Y_(r), Y_(s)]` is an `(ε, δ)` tolerance interval:
/// `I_{1-ε}(s - r, n - s + r + 1) <= δ`.
pub fn wilks_is_tolerance(n: u64, r: u64, s: u64, eps: f64, delta: f64) -> Result<bool> {
    check_unit_open("eps", eps)?;
    check_unit_open("delta", delta)?;
    let law = wilks_interval_law(n, r, s)?;
    Ok(dists::beta_reg(1.0 - eps, law)? <= delta)
}
