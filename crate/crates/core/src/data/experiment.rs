//! End-to-end CQR experiment: fit and tune a k-NN quantile base on a proper
//! training part, then recalibrate it over many random calibration/test
//! splits of the remaining pool.

use super::{gen_synthetic, load_csv, run_trials, standardize, summarize, ExperimentSummary, TrialConfig, TrialReport};
use crate::calibration::{calibration_index, law_for_index, TargetGuarantee};
use crate::error::{Error, Result};
use crate::predictors::{default_level_grid, fit_knn_quantile, tune_nominal_quantiles, KnnQuantileConfig, TuneReport};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic,
    Csv { path: PathBuf, label_col: String },
}

/// Unset sizes default to 1000/1000/5000 for synthetic data and to a
/// 40/40/20 % train/calibration/test split of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub n_train: Option<usize>,
    pub n: Option<usize>,
    pub n_test: Option<usize>,
    pub trials: usize,
    pub target: TargetGuarantee,
    pub k_neighbors: usize,
    pub folds: usize,
    pub candidates: Vec<(f64, f64)>,
    pub master_seed: u64,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            n_train: None,
            n: None,
            n_test: None,
            trials: 1000,
            target: TargetGuarantee::Tolerance { eps: 0.1, delta: 0.1 },
            k_neighbors: 50,
            folds: 10,
            candidates: default_level_grid(),
            master_seed: 0,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub tune: TuneReport,
    pub reports: Vec<TrialReport>,
    pub summary: ExperimentSummary,
}

/// SplitMix64 of `master ^ tag`, used to give each stage its own seed.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.target.validate()?;
    if cfg.trials == 0 {
        return Err(Error::Invalid("need at least one trial".into()));
    }
    let (train, pool, n, n_test) = match &cfg.source {
        DataSource::Synthetic => {
            let n_train = cfg.n_train.unwrap_or(1000);
            let n = cfg.n.unwrap_or(1000);
            let n_test = cfg.n_test.unwrap_or(5000);
            (
                gen_synthetic(n_train, derive_seed(cfg.master_seed, 1)),
                gen_synthetic(n + n_test, derive_seed(cfg.master_seed, 2)),
                n,
                n_test,
            )
        }
        DataSource::Csv { path, label_col } => {
            let all = load_csv(path, label_col)?;
            let total = all.len();
            let n_train = cfg.n_train.unwrap_or(total * 2 / 5);
            let n = cfg.n.unwrap_or(total * 2 / 5);
            let n_test = cfg.n_test.unwrap_or(total - (total * 2 / 5) * 2);
            if n_train + n + n_test > total {
                return Err(Error::Invalid(format!(
                    "{total} rows cannot supply {n_train} + {n} + {n_test}"
                )));
            }
            let mut order: Vec<usize> = (0..total).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, 3)));
            let (tr, rest) = order.split_at(n_train);
            let (train, pool, _) = standardize(&all.subset(tr), &all.subset(&rest[..n + n_test]))?;
            (train, pool, n, n_test)
        }
    };

    let tune = tune_nominal_quantiles(
        &train,
        &cfg.candidates,
        cfg.k_neighbors,
        cfg.target,
        cfg.folds,
        derive_seed(cfg.master_seed, 4),
    )?;
    let (lo, hi) = tune.selected;
    let base = fit_knn_quantile(&train, KnnQuantileConfig::new(cfg.k_neighbors, lo, hi)?)?;

    let trial_cfg = TrialConfig {
        n,
        n_test,
        trials: cfg.trials,
        master_seed: derive_seed(cfg.master_seed, 5),
        workers: cfg.workers,
    };
    let reports = run_trials(&base, &pool, trial_cfg, cfg.target)?;

    let index = calibration_index(n as u64, cfg.target)?;
    let law = law_for_index(n as u64, index)
        .ok_or_else(|| Error::Invalid("calibrator returns the full label space; no coverage law".into()))?;
    let (eps, delta) = match cfg.target {
        TargetGuarantee::Tolerance { eps, delta } => (eps, delta),
        TargetGuarantee::Marginal { alpha } => (alpha, alpha),
    };
    let mut summary = summarize(&reports, law, eps, delta, n_test);
    summary.seed = Some(cfg.master_seed);
    Ok(ExperimentRun { tune, reports, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            n_train: Some(200),
            n: Some(100),
            n_test: Some(100),
            trials: 20,
            k_neighbors: 20,
            folds: 4,
            candidates: vec![(0.05, 0.95), (0.2, 0.8)],
            master_seed: seed,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = run_experiment(&small(3)).unwrap();
        let b = run_experiment(&ExperimentConfig { workers: 3, ..small(3) }).unwrap();
        assert_eq!(a.reports, b.reports);
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.summary.law.a, 95.0);
        assert_eq!(a.summary.seed, Some(3));
    }

    #[test]
    fn single_trial() {
        let r = run_experiment(&ExperimentConfig { trials: 1, ..small(1) }).unwrap();
        assert_eq!(r.reports.len(), 1);
    }

    #[test]
    fn seeds_separate_stages() {
        assert_ne!(derive_seed(0, 1), derive_seed(0, 2));
        assert_ne!(derive_seed(0, 1), derive_seed(1, 1));
    }
}
