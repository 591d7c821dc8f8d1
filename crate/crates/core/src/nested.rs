//! Nested prediction sets and the score they induce.
//!
//! A family `{S_λ(x)}` indexed by `λ ∈ Λ` grows with `λ`, is empty at
//! `inf Λ` and covers every label at `sup Λ`. The nonconformity score of a
//! labelled point is the smallest `λ` whose set contains the label, and
//! membership is exactly `score(x, y) <= λ`. Families here attain that
//! infimum (right-continuous nesting).

use crate::error::{Error, Result};
use crate::predictors::IntervalPredictor;
use serde::Serialize;

/// The closed index set `Λ`, given by its end points in the extended reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaDomain {
    pub lo: f64,
    pub hi: f64,
}

impl LambdaDomain {
    /// The whole extended real line.
    pub const EXTENDED_REAL: LambdaDomain = LambdaDomain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::Invalid(format!("lambda domain needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, lam: f64) -> bool {
        lam >= self.lo && lam <= self.hi
    }

    pub fn clamp(&self, lam: f64) -> f64 {
        lam.clamp(self.lo, self.hi)
    }
}

impl Default for LambdaDomain {
    fn default() -> Self {
        Self::EXTENDED_REAL
    }
}

/// A subset of the real label space that a family can produce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LabelSet {
    Empty,
    /// Closed interval; infinite ends denote the corresponding half-line.
    Interval { lo: f64, hi: f64 },
}

impl LabelSet {
    pub const WHOLE_LINE: LabelSet = LabelSet::Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, y: f64) -> bool {
        match *self {
            LabelSet::Empty => false,
            LabelSet::Interval { lo, hi } => lo <= y && y <= hi,
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            LabelSet::Empty => 0.0,
            LabelSet::Interval { lo, hi } => hi - lo,
        }
    }

    pub fn is_subset_of(&self, other: &LabelSet) -> bool {
        match (*self, *other) {
            (LabelSet::Empty, _) => true,
            (_, LabelSet::Empty) => false,
            (LabelSet::Interval { lo: a, hi: b }, LabelSet::Interval { lo: c, hi: d }) => c <= a && b <= d,
        }
    }
}

/// Nonconformity score `r(x, y) = inf{λ ∈ Λ : y ∈ S_λ(x)}`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Score(pub f64);

impl Score {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub trait NestedFamily {
    type Input: ?Sized;

    fn domain(&self) -> LambdaDomain;

    fn set_at(&self, lam: f64, x: &Self::Input) -> LabelSet;

    fn score_of(&self, x: &Self::Input, y: f64) -> Score;

    /// `y ∈ S_λ(x)`, decided as `score_of(x, y) <= λ` so that membership and
    /// calibration thresholds agree bit for bit.
    fn member(&self, lam: f64, x: &Self::Input, y: f64) -> bool {
        self.score_of(x, y).value() <= lam
    }
}

/// `S_λ(x) = [lo(x) - λ, hi(x) + λ]` around a base interval, `Λ = [-∞, +∞]`.
///
/// With a point predictor (`lo = hi`) the score is the absolute residual;
/// with a quantile-regression interval it is the signed CQR score.
#[derive(Debug, Clone)]
pub struct SymmetricExpansion<P> {
    base: P,
}

impl<P: IntervalPredictor> SymmetricExpansion<P> {
    pub fn new(base: P) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &P {
        &self.base
    }
}

pub(crate) fn expand(lo: f64, hi: f64, lam: f64) -> LabelSet {
    if lam == f64::INFINITY {
        return LabelSet::WHOLE_LINE;
    }
    if lam == f64::NEG_INFINITY {
        return LabelSet::Empty;
    }
    let (a, b) = (lo - lam, hi + lam);
    if a > b {
        LabelSet::Empty
    } else {
        LabelSet::Interval { lo: a, hi: b }
    }
}

pub(crate) fn expansion_score(lo: f64, hi: f64, y: f64) -> f64 {
    (lo - y).max(y - hi)
}

impl<P: IntervalPredictor> NestedFamily for SymmetricExpansion<P> {
    type Input = [f64];

    fn domain(&self) -> LambdaDomain {
        LambdaDomain::EXTENDED_REAL
    }

    fn set_at(&self, lam: f64, x: &[f64]) -> LabelSet {
        let (lo, hi) = self.base.predict(x);
        expand(lo, hi, lam)
    }

    fn score_of(&self, x: &[f64], y: f64) -> Score {
        let (lo, hi) = self.base.predict(x);
        Score(expansion_score(lo, hi, y))
    }
}
