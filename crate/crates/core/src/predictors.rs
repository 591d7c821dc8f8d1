//! Interval base predictors and conformalized quantile regression (CQR).
//!
//! CQR widens a quantile-regression interval `[lo(x), hi(x)]` symmetrically
//! by `λ`. Its score `max(lo(x) - y, y - hi(x))` is signed, so a calibrated
//! `λ̂` can also shrink an interval that is too conservative.

use crate::calibration::{calibrate, NonconformityScores, TargetGuarantee};
use crate::data::Dataset;
use crate::error::{check_unit_open, Error, Result};
use crate::levels::scaled_ceil;
use crate::nested::{expand, expansion_score, LabelSet};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Maps features to a prediction interval `(lo, hi)` with `lo <= hi`.
pub trait IntervalPredictor: Send + Sync {
    fn predict(&self, x: &[f64]) -> (f64, f64);
}

impl<P: IntervalPredictor + ?Sized> IntervalPredictor for &P {
    fn predict(&self, x: &[f64]) -> (f64, f64) {
        (**self).predict(x)
    }
}

impl<P: IntervalPredictor + ?Sized> IntervalPredictor for Box<P> {
    fn predict(&self, x: &[f64]) -> (f64, f64) {
        (**self).predict(x)
    }
}

/// The same interval for every input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantInterval {
    lo: f64,
    hi: f64,
}

impl ConstantInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo: lo.min(hi),
            hi: lo.max(hi),
        }
    }
}

impl IntervalPredictor for ConstantInterval {
    fn predict(&self, _x: &[f64]) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnnQuantileConfig {
    pub k: usize,
    pub lo_level: f64,
    pub hi_level: f64,
}

impl KnnQuantileConfig {
    pub fn new(k: usize, lo_level: f64, hi_level: f64) -> Result<Self> {
        let cfg = Self { k, lo_level, hi_level };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Invalid("k must be at least 1".into()));
        }
        check_unit_open("lo_level", self.lo_level)?;
        check_unit_open("hi_level", self.hi_level)?;
        if self.lo_level >= self.hi_level {
            return Err(Error::Invalid(format!(
                "need lo_level < hi_level, got {} >= {}",
                self.lo_level, self.hi_level
            )));
        }
        Ok(())
    }
}

/// Conditional quantiles from the `k` nearest training labels.
///
/// Distances are Euclidean on features standardized with the training
/// means and (population) standard deviations. The level-`q` quantile is the
/// `⌈q·k⌉`-th smallest neighbour label. Distance ties are broken by training
/// row order, so predictions are deterministic.
#[derive(Debug, Clone)]
pub struct KnnQuantile {
    config: KnnQuantileConfig,
    features: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
    means: Vec<f64>,
    scales: Vec<f64>,
    lo_rank: usize,
    hi_rank: usize,
}

pub fn fit_knn_quantile(train: &Dataset, config: KnnQuantileConfig) -> Result<KnnQuantile> {
    config.validate()?;
    let n = train.len();
    if config.k > n {
        return Err(Error::Invalid(format!("k = {} exceeds training size {n}", config.k)));
    }
    let dim = train.n_features();
    let (means, sds) = train.feature_moments();
    let scales: Vec<f64> = sds.iter().map(|&s| if s > 0.0 { 1.0 / s } else { 1.0 }).collect();
    let mut features = Vec::with_capacity(n * dim);
    for i in 0..n {
        for (j, &v) in train.row(i).iter().enumerate() {
            features.push((v - means[j]) * scales[j]);
        }
    }
    let rank = |q: f64| (scaled_ceil(q, config.k as u64).max(1) as usize).min(config.k);
    Ok(KnnQuantile {
        config,
        features,
        labels: train.labels().to_vec(),
        dim,
        means,
        scales,
        lo_rank: rank(config.lo_level),
        hi_rank: rank(config.hi_level),
    })
}

impl KnnQuantile {
    pub fn config(&self) -> KnnQuantileConfig {
        self.config
    }

    fn neighbour_labels(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = x
            .iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(&v, (&m, &s))| (v - m) * s)
            .collect();
        let mut dist: Vec<(f64, usize)> = self
            .features
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, row)| {
                let d: f64 = row.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        let k = self.config.k;
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        let mut labels: Vec<f64> = dist.iter().map(|&(_, i)| self.labels[i]).collect();
        labels.sort_by(f64::total_cmp);
        labels
    }
}

impl IntervalPredictor for KnnQuantile {
    fn predict(&self, x: &[f64]) -> (f64, f64) {
        let labels = self.neighbour_labels(x);
        let lo = labels[self.lo_rank - 1];
        let hi = labels[self.hi_rank - 1];
        if lo <= hi {
            (lo, hi)
        } else {
            (hi, lo)
        }
    }
}

/// `max(lo(x) - y, y - hi(x))`; negative iff `y` lies strictly inside.
pub fn cqr_score<P: IntervalPredictor + ?Sized>(predictor: &P, x: &[f64], y: f64) -> f64 {
    let (lo, hi) = predictor.predict(x);
    expansion_score(lo, hi, y)
}

/// `[lo(x) - λ, hi(x) + λ]`; the whole line at `λ = +∞` and empty once
/// `λ < -(hi - lo)/2`.
pub fn cqr_set<P: IntervalPredictor + ?Sized>(predictor: &P, lam: f64, x: &[f64]) -> LabelSet {
    let (lo, hi) = predictor.predict(x);
    expand(lo, hi, lam)
}

/// `(β/2, 1 - β/2)` for `β ∈ {0.05, 0.10, ..., 0.40}`.
pub fn default_level_grid() -> Vec<(f64, f64)> {
    (1..=8)
        .map(|i| {
            let beta = 0.05 * i as f64;
            (beta / 2.0, 1.0 - beta / 2.0)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneReport {
    pub levels: Vec<(f64, f64)>,
    /// Mean calibrated interval length per candidate, averaged over folds.
    pub mean_lengths: Vec<f64>,
    pub selected: (f64, f64),
}

/// Cross-validated choice of nominal quantile levels for a k-NN base.
///
/// See [`tune_with`] for the protocol.
pub fn tune_nominal_quantiles(
    train: &Dataset,
    candidates: &[(f64, f64)],
    k: usize,
    target: TargetGuarantee,
    folds: usize,
    seed: u64,
) -> Result<TuneReport> {
    tune_with(train, candidates, target, folds, seed, |part, (lo, hi)| {
        fit_knn_quantile(part, KnnQuantileConfig::new(k, lo, hi)?)
    })
}

/// For each candidate level pair and each of `folds` folds: fit on the other
/// folds, calibrate on the held-out fold for `target`, and record the mean
/// length of the calibrated intervals on that fold. The candidate with the
/// smallest fold-averaged length wins (first one on ties). Fold membership
/// comes from a seeded shuffle.
pub fn tune_with<P, F>(
    train: &Dataset,
    candidates: &[(f64, f64)],
    target: TargetGuarantee,
    folds: usize,
    seed: u64,
    fit: F,
) -> Result<TuneReport>
where
    P: IntervalPredictor,
    F: Fn(&Dataset, (f64, f64)) -> Result<P>,
{
    target.validate()?;
    if candidates.is_empty() {
        return Err(Error::Invalid("no candidate quantile levels".into()));
    }
    if folds < 2 {
        return Err(Error::Invalid(format!("need at least 2 folds, got {folds}")));
    }
    if train.len() < folds {
        return Err(Error::Invalid(format!(
            "{} training rows cannot fill {folds} folds",
            train.len()
        )));
    }

    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_of: Vec<usize> = {
        let mut f = vec![0; train.len()];
        for (pos, &row) in order.iter().enumerate() {
            f[row] = pos % folds;
        }
        f
    };
    let splits: Vec<(Dataset, Dataset)> = (0..folds)
        .map(|fold| {
            let (fit_rows, held): (Vec<usize>, Vec<usize>) = (0..train.len()).partition(|&i| fold_of[i] != fold);
            (train.subset(&fit_rows), train.subset(&held))
        })
        .collect();

    let mut mean_lengths = Vec::with_capacity(candidates.len());
    for &levels in candidates {
        let mut total = 0.0;
        for (fit_part, held) in &splits {
            let predictor = fit(fit_part, levels)?;
            let bases: Vec<(f64, f64)> = (0..held.len()).map(|i| predictor.predict(held.row(i))).collect();
            let scores = NonconformityScores::new(
                bases
                    .iter()
                    .zip(held.labels())
                    .map(|(&(lo, hi), &y)| expansion_score(lo, hi, y))
                    .collect(),
            )?;
            let lam = calibrate(&scores, target)?.lambda_hat;
            let len: f64 = bases.iter().map(|&(lo, hi)| expand(lo, hi, lam).length()).sum::<f64>() / held.len() as f64;
            total += len;
        }
        mean_lengths.push(total / folds as f64);
    }
    let best = mean_lengths
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < mean_lengths[best] { i } else { best });
    Ok(TuneReport {
        levels: candidates.to_vec(),
        selected: candidates[best],
        mean_lengths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nested::{NestedFamily, SymmetricExpansion};
    use proptest::prelude::*;
    use rand::Rng;

    fn one_dim(xs: &[f64], ys: &[f64]) -> Dataset {
        Dataset::new(xs.iter().map(|&x| vec![x]).collect(), ys.to_vec()).unwrap()
    }

    #[test]
    fn cqr_score_examples() {
        let p = ConstantInterval::new(2.0, 5.0);
        assert_eq!(cqr_score(&p, &[], 7.0), 2.0);
        assert_eq!(cqr_score(&p, &[], 5.0), 0.0);
        assert_eq!(cqr_score(&p, &[], 3.0), -1.0);
    }

    #[test]
    fn cqr_set_examples() {
        let p = ConstantInterval::new(2.0, 5.0);
        assert_eq!(cqr_set(&p, 0.0, &[]), LabelSet::Interval { lo: 2.0, hi: 5.0 });
        assert_eq!(cqr_set(&p, f64::INFINITY, &[]), LabelSet::WHOLE_LINE);
        assert_eq!(cqr_set(&p, -1.6, &[]), LabelSet::Empty);
        assert_eq!(cqr_set(&p, -1.5, &[]), LabelSet::Interval { lo: 3.5, hi: 3.5 });
        assert!((cqr_set(&p, 0.75, &[]).length() - (3.0 + 1.5)).abs() < 1e-15);
    }

    #[test]
    fn knn_degenerate_and_global_cases() {
        let xs: Vec<f64> = (0..20).map(f64::from).collect();
        let constant = one_dim(&xs, &[4.0; 20]);
        let p = fit_knn_quantile(&constant, KnnQuantileConfig::new(5, 0.1, 0.9).unwrap()).unwrap();
        assert_eq!(p.predict(&[3.3]), (4.0, 4.0));

        // k = n_train: global order statistics ⌈0.25·20⌉ = 5 and ⌈0.75·20⌉ = 15
        let ys: Vec<f64> = (0..20).rev().map(|v| v as f64 * 10.0).collect();
        let data = one_dim(&xs, &ys);
        let p = fit_knn_quantile(&data, KnnQuantileConfig::new(20, 0.25, 0.75).unwrap()).unwrap();
        assert_eq!(p.predict(&[-100.0]), (40.0, 140.0));
        assert_eq!(p.predict(&[100.0]), (40.0, 140.0));

        assert!(fit_knn_quantile(&data, KnnQuantileConfig { k: 21, lo_level: 0.1, hi_level: 0.9 }).is_err());
        assert!(KnnQuantileConfig::new(3, 0.9, 0.1).is_err());
        assert!(KnnQuantileConfig::new(0, 0.1, 0.9).is_err());
    }

    #[test]
    fn knn_uniform_labels_recover_quartiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4000;
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let data = one_dim(&xs, &ys);
        let p = fit_knn_quantile(&data, KnnQuantileConfig::new(2000, 0.25, 0.75).unwrap()).unwrap();
        let (lo, hi) = p.predict(&[0.5]);
        // order statistics of 2000 uniforms: sd ≈ sqrt(0.25·0.75/2000) ≈ 0.0097
        assert!((lo - 0.25).abs() < 0.04, "{lo}");
        assert!((hi - 0.75).abs() < 0.04, "{hi}");
    }

    #[test]
    fn tuning_single_candidate_and_dominance() {
        let xs: Vec<f64> = (0..50).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 0.37).sin()).collect();
        let data = one_dim(&xs, &ys);
        let target = TargetGuarantee::Marginal { alpha: 0.2 };
        let r = tune_nominal_quantiles(&data, &[(0.1, 0.9)], 5, target, 5, 1).unwrap();
        assert_eq!(r.selected, (0.1, 0.9));

        // a candidate that predicts the label exactly has zero-length calibrated sets on every fold
        struct Oracle;
        impl IntervalPredictor for Oracle {
            fn predict(&self, x: &[f64]) -> (f64, f64) {
                let y = (x[0] * 0.37).sin();
                (y, y)
            }
        }
        let r = tune_with(&data, &[(0.1, 0.9), (0.2, 0.8), (0.3, 0.7)], target, 5, 1, |_, lv| {
            Ok(if lv == (0.2, 0.8) {
                Box::new(Oracle) as Box<dyn IntervalPredictor>
            } else {
                Box::new(ConstantInterval::new(-1.0, 1.0))
            })
        })
        .unwrap();
        assert_eq!(r.selected, (0.2, 0.8));
        assert!(r.mean_lengths[1] < r.mean_lengths[0]);

        assert!(tune_nominal_quantiles(&data, &[(0.1, 0.9)], 5, target, 1, 1).is_err());
        assert!(tune_nominal_quantiles(&data, &[], 5, target, 5, 1).is_err());
    }

    #[test]
    fn default_grid_is_symmetric() {
        let g = default_level_grid();
        assert_eq!(g.len(), 8);
        for (lo, hi) in g {
            assert!((lo + hi - 1.0).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn cqr_galois(lo in -5.0f64..5.0, w in 0.0f64..4.0, y in -12.0f64..12.0, lam in -6.0f64..6.0) {
            let p = ConstantInterval::new(lo, lo + w);
            let s = cqr_score(&p, &[], y);
            prop_assume!((s - lam).abs() > 1e-9);
            prop_assert_eq!(cqr_set(&p, lam, &[]).contains(y), s <= lam);
            let fam = SymmetricExpansion::new(p);
            prop_assert_eq!(fam.member(lam, &[], y), s <= lam);
        }
    }
}
