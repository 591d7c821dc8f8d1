//! Repeated calibration/test splits for a fixed base predictor.

use super::Dataset;
use crate::calibration::{calibrate, NonconformityScores, TargetGuarantee};
use crate::error::{Error, Result};
use crate::nested::{expand, expansion_score};
use crate::predictors::IntervalPredictor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialConfig {
    pub n: usize,
    pub n_test: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub lambda_hat: f64,
    /// Number of covered test labels.
    pub covered: u64,
    /// `covered / n_test`.
    pub coverage: f64,
    pub avg_length: f64,
    pub n: usize,
    pub n_test: usize,
}

pub fn run_trials<P: IntervalPredictor + ?Sized>(
    base: &P,
    pool: &Dataset,
    config: TrialConfig,
    target: TargetGuarantee,
) -> Result<Vec<TrialReport>> {
    target.validate()?;
    run_trials_with(base, pool, config, |scores| Ok(calibrate(scores, target)?.lambda_hat))
}

/// Trial `j` draws a random `n + n_test` subset of `pool` from ChaCha stream
/// `j` of `master_seed`: the first `n` rows calibrate (through `calibrator`),
/// the rest are tested. Base intervals are computed once for the pool.
/// Reports come back in trial order and do not depend on `workers`.
pub fn run_trials_with<P, C>(base: &P, pool: &Dataset, config: TrialConfig, calibrator: C) -> Result<Vec<TrialReport>>
where
    P: IntervalPredictor + ?Sized,
    C: Fn(&NonconformityScores) -> Result<f64> + Sync,
{
    let TrialConfig { n, n_test, trials, .. } = config;
    if n == 0 || n_test == 0 {
        return Err(Error::Invalid("n and n_test must be positive".into()));
    }
    if n + n_test > pool.len() {
        return Err(Error::Invalid(format!(
            "pool of {} rows cannot supply n + n_test = {}",
            pool.len(),
            n + n_test
        )));
    }
    let bases: Vec<(f64, f64)> = (0..pool.len()).map(|i| base.predict(pool.row(i))).collect();
    let scores: Vec<f64> = bases
        .iter()
        .zip(pool.labels())
        .map(|(&(lo, hi), &y)| expansion_score(lo, hi, y))
        .collect();

    let one = |j: usize| -> Result<TrialReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
        rng.set_stream(j as u64);
        let idx = rand::seq::index::sample(&mut rng, pool.len(), n + n_test).into_vec();
        let (cal, test) = idx.split_at(n);
        let lam = calibrator(&NonconformityScores::new(cal.iter().map(|&i| scores[i]).collect())?)?;
        let covered = test.iter().filter(|&&i| scores[i] <= lam).count() as u64;
        let total_len: f64 = test.iter().map(|&i| expand(bases[i].0, bases[i].1, lam).length()).sum();
        Ok(TrialReport {
            trial: j,
            lambda_hat: lam,
            covered,
            coverage: covered as f64 / n_test as f64,
            avg_length: total_len / n_test as f64,
            n,
            n_test,
        })
    };

    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    threads.install(|| (0..trials).into_par_iter().map(one).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_synthetic;
    use crate::predictors::ConstantInterval;

    fn cfg(trials: usize, workers: usize) -> TrialConfig {
        TrialConfig {
            n: 100,
            n_test: 200,
            trials,
            master_seed: 17,
            workers,
        }
    }

    #[test]
    fn forced_full_set_covers_everything() {
        let pool = gen_synthetic(400, 1);
        let base = ConstantInterval::new(0.0, 0.0);
        let r = run_trials_with(&base, &pool, cfg(1, 1), |_| Ok(f64::INFINITY)).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].coverage, 1.0);
        assert_eq!(r[0].covered, 200);
    }

    #[test]
    fn reports_ignore_worker_count() {
        let pool = gen_synthetic(400, 2);
        let base = ConstantInterval::new(0.0, 1.0);
        let target = TargetGuarantee::Tolerance { eps: 0.1, delta: 0.1 };
        let a = run_trials(&base, &pool, cfg(40, 1), target).unwrap();
        let b = run_trials(&base, &pool, cfg(40, 4), target).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(j, r)| r.trial == j));
        assert!(a.windows(2).any(|w| w[0].coverage != w[1].coverage));
    }

    #[test]
    fn coverage_on_test_grid() {
        let pool = gen_synthetic(300, 3);
        let base = ConstantInterval::new(0.0, 1.0);
        let r = run_trials(&base, &pool, cfg(5, 2), TargetGuarantee::Marginal { alpha: 0.2 }).unwrap();
        for t in r {
            assert_eq!(t.coverage * 200.0, t.covered as f64);
            assert!(t.avg_length >= 0.0);
        }
    }

    #[test]
    fn insufficient_pool() {
        let pool = gen_synthetic(250, 3);
        let base = ConstantInterval::new(0.0, 1.0);
        assert!(run_trials(&base, &pool, cfg(1, 1), TargetGuarantee::Marginal { alpha: 0.2 }).is_err());
    }
}
