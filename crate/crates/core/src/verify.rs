//! Property suites that check the library against independent computations.
//!
//! Each suite returns a [`SuiteReport`] with the number of checks and
//! failures. The calibrators under test are passed in through
//! [`Calibrators`], so a deliberately broken calibrator can be checked to
//! make the suites fail.

use crate::calibration::{
    alpha_given_tolerance, calibration_index, p_hat, q_hat, tolerance_delta_given_alpha, tolerance_eps_given_alpha,
    CalibrationResult, NonconformityScores, TargetGuarantee,
};
use crate::data::{gen_synthetic, run_trials, summarize, TrialConfig};
use crate::dists::{beta_reg, binom_cdf, BetaParams};
use crate::error::{Error, Result};
use crate::nested::LambdaDomain;
use crate::predictors::ConstantInterval;
use crate::risk::{crc_lambda, ltt_fixed_sequence, ltt_pvalues, ucb_lambda, LossCurve, UcbMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

pub type QHatFn = fn(&NonconformityScores, f64) -> Result<CalibrationResult>;
pub type PHatFn = fn(&NonconformityScores, f64, f64) -> Result<CalibrationResult>;

#[derive(Clone, Copy)]
pub struct Calibrators {
    pub q_hat: QHatFn,
    pub p_hat: PHatFn,
}

impl Default for Calibrators {
    fn default() -> Self {
        Self { q_hat, p_hat }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identity,
    Duality,
    Equivalence,
    Sandwich,
    Ks,
    Pvalues,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Identity,
        Suite::Duality,
        Suite::Equivalence,
        Suite::Sandwich,
        Suite::Ks,
        Suite::Pvalues,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identity => "identity",
            Suite::Duality => "duality",
            Suite::Equivalence => "equivalence",
            Suite::Sandwich => "sandwich",
            Suite::Ks => "ks",
            Suite::Pvalues => "pvalues",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Trials for the coverage-law check.
    pub trials: usize,
    /// Random score sets for the equivalence suite.
    pub cases: usize,
    /// Simulated worlds for the p-value suite.
    pub worlds: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 1000,
            cases: 1000,
            worlds: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: u64,
    pub failures: u64,
    pub notes: Vec<String>,
}

#[derive(Default)]
struct Tally {
    checks: u64,
    failures: u64,
    notes: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.notes.len() < 10 {
                self.notes.push(what());
            }
        }
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    fn finish(self, suite: Suite) -> SuiteReport {
        SuiteReport {
            suite,
            passed: self.failures == 0,
            checks: self.checks,
            failures: self.failures,
            notes: self.notes,
        }
    }
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig, cal: &Calibrators) -> Result<SuiteReport> {
    let tally = match suite {
        Suite::Identity => identity()?,
        Suite::Duality => duality(cal)?,
        Suite::Equivalence => equivalence(cfg, cal)?,
        Suite::Sandwich => sandwich(cfg, cal)?,
        Suite::Ks => coverage_law(cfg)?,
        Suite::Pvalues => pvalues(cfg)?,
    };
    Ok(tally.finish(suite))
}

pub fn run_all(cfg: &VerifyConfig, cal: &Calibrators) -> Result<Vec<SuiteReport>> {
    Suite::ALL.iter().map(|&s| run_suite(s, cfg, cal)).collect()
}

/// `I_{1-p}(m+1-k, k) = Bin(k-1; m, p)` for `k ∈ 1..=10`, `m ∈ {10, ..., 100}`,
/// `p ∈ {0.1, ..., 0.9}`.
fn identity() -> Result<Tally> {
    let mut t = Tally::default();
    for k in 1..=10u64 {
        for m in (10..=100u64).step_by(10) {
            for j in 1..=9 {
                let p = j as f64 / 10.0;
                let lhs = beta_reg(1.0 - p, BetaParams::new((m + 1 - k) as f64, k as f64)?)?;
                let rhs = binom_cdf(k as i64 - 1, m, p)?;
                t.check((lhs - rhs).abs() <= 1e-10, || format!("k={k} m={m} p={p}: {lhs} vs {rhs}"));
            }
        }
    }
    Ok(t)
}

fn duality(cal: &Calibrators) -> Result<Tally> {
    let mut t = Tally::default();
    let d = alpha_given_tolerance(1000, 0.1, 0.1)?;
    t.check((d.numerator, d.denominator) == (88, 1001), || format!("dual alpha {d:?}"));
    let scores = NonconformityScores::new((1..=1000).map(f64::from).collect())?;
    let idx = (cal.p_hat)(&scores, 0.1, 0.1)?.order_index;
    t.check(idx == 913, || format!("p_hat index {idx}"));
    let idx = (cal.q_hat)(&scores, d.alpha())?.order_index;
    t.check(idx == 913, || format!("q_hat index at 88/1001: {idx}"));

    let levels = [0.2, 0.1, 0.05, 0.01, 0.005];
    for n in [10u64, 50, 100, 500, 1000, 10_000] {
        for &eps in &levels {
            for &delta in &levels {
                let d = alpha_given_tolerance(n, eps, delta)?;
                let target = TargetGuarantee::Tolerance { eps, delta };
                let pi = calibration_index(n, target)?;
                let qi = calibration_index(n, TargetGuarantee::Marginal { alpha: d.alpha() })?;
                if d.full_set {
                    t.check(pi == n + 1, || format!("n={n} eps={eps} delta={delta}: infeasible but index {pi}"));
                    continue;
                }
                t.check(pi == qi, || format!("n={n} eps={eps} delta={delta}: index {pi} vs {qi}"));
                let dd = tolerance_delta_given_alpha(n, d.alpha(), eps)?;
                t.check(dd <= delta, || format!("n={n} eps={eps} delta={delta}: delta' = {dd}"));
                let de = tolerance_eps_given_alpha(n, d.alpha(), delta)?;
                t.check(de <= eps, || format!("n={n} eps={eps} delta={delta}: eps' = {de}"));
            }
        }
    }
    Ok(t)
}

fn random_scores(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(1..=200);
    if rng.random::<bool>() {
        (0..n).map(|_| rng.random::<f64>()).collect()
    } else {
        let levels = rng.random_range(2..40) as f64;
        (0..n).map(|_| (rng.random::<f64>() * levels).floor()).collect()
    }
}

/// CRC and exact-binomial UCB on 0-1 losses against the order-statistic
/// calibrators, and fixed-sequence LTT against UCB on a fine grid.
fn equivalence(cfg: &VerifyConfig, cal: &Calibrators) -> Result<Tally> {
    let mut t = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dom = LambdaDomain::EXTENDED_REAL;
    for case in 0..cfg.cases {
        let s = random_scores(&mut rng);
        let curves: Vec<LossCurve> = s.iter().map(|&v| LossCurve::zero_one(v)).collect();
        let scores = NonconformityScores::new(s)?;
        let alpha = rng.random_range(0.005..0.5);
        let eps = rng.random_range(0.005..0.5);
        let delta = rng.random_range(0.005..0.5);
        let crc = crc_lambda(&curves, 1.0, alpha, dom)?;
        let q = (cal.q_hat)(&scores, alpha)?.lambda_hat;
        t.check(crc == q, || format!("case {case}: crc {crc} vs q_hat {q} (n={}, alpha={alpha})", scores.len()));
        let ucb = ucb_lambda(&curves, eps, delta, UcbMethod::ExactBinomial, dom)?;
        let p = (cal.p_hat)(&scores, eps, delta)?.lambda_hat;
        t.check(ucb == p, || format!("case {case}: ucb {ucb} vs p_hat {p} (n={}, eps={eps}, delta={delta})", scores.len()));
    }

    let grid: Vec<f64> = (0..10_000).map(|i| i as f64 / 9_999.0).collect();
    let step = 1.0 / 9_999.0;
    for case in 0..20 {
        let n = rng.random_range(50..=200);
        let s: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let curves: Vec<LossCurve> = s.iter().map(|&v| LossCurve::zero_one(v)).collect();
        let (eps, delta) = (0.1, 0.1);
        let ucb = ucb_lambda(&curves, eps, delta, UcbMethod::ExactBinomial, dom)?;
        let fs = ltt_fixed_sequence(&ltt_pvalues(&grid, &curves, eps)?, delta);
        match fs.first() {
            Some(&m) => t.check(m >= ucb && m - ucb <= step * (1.0 + 1e-9), || {
                format!("ltt case {case}: min selected {m}, ucb {ucb}")
            }),
            None => t.check(ucb > 1.0, || format!("ltt case {case}: nothing selected, ucb {ucb}")),
        }
    }
    Ok(t)
}

fn for_each_permutation(items: &mut [u32], k: usize, f: &mut impl FnMut(&[u32])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        for_each_permutation(items, k + 1, f);
        items.swap(k, i);
    }
}

/// Exact marginal coverage over all orderings of `n + 1` distinct scores
/// lies in `[1-α, 1-α+1/(n+1)]`; also a Monte Carlo check of CRC's risk.
fn sandwich(cfg: &VerifyConfig, cal: &Calibrators) -> Result<Tally> {
    let mut t = Tally::default();
    for n in 2..=6usize {
        for alpha in [0.1, 0.2, 0.3] {
            let (mut covered, mut total) = (0u64, 0u64);
            let mut items: Vec<u32> = (0..=n as u32).collect();
            let mut err = None;
            for_each_permutation(&mut items, 0, &mut |p| {
                let cal_scores: Vec<f64> = p[..n].iter().map(|&v| v as f64).collect();
                match NonconformityScores::new(cal_scores).and_then(|s| (cal.q_hat)(&s, alpha)) {
                    Ok(r) => {
                        total += 1;
                        covered += u64::from(p[n] as f64 <= r.lambda_hat);
                    }
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            let cov = covered as f64 / total as f64;
            let (lo, hi) = (1.0 - alpha, 1.0 - alpha + 1.0 / (n as f64 + 1.0));
            t.check(cov >= lo - 1e-12 && cov <= hi + 1e-12, || {
                format!("n={n} alpha={alpha}: coverage {covered}/{total} outside [{lo}, {hi}]")
            });
        }
    }

    // E[R(λ̂)] for U(0,1) scores, where R(λ) = 1 - λ on [0, 1]
    let (n, alpha, worlds) = (19usize, 0.2, cfg.worlds);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5a5a);
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..worlds {
        let curves: Vec<LossCurve> = (0..n).map(|_| LossCurve::zero_one(rng.random())).collect();
        let lam = crc_lambda(&curves, 1.0, alpha, LambdaDomain::EXTENDED_REAL)?;
        let risk = (1.0 - lam).clamp(0.0, 1.0);
        sum += risk;
        sq += risk * risk;
    }
    let mean = sum / worlds as f64;
    let se = ((sq / worlds as f64 - mean * mean) / worlds as f64).sqrt();
    let lo = alpha - 2.0 / (n as f64 + 1.0) - 3.0 * se;
    t.check(mean >= lo && mean <= alpha + 3.0 * se, || format!("CRC mean risk {mean} (se {se})"));
    Ok(t)
}

/// Empirical coverage over repeated splits against `BetaBin(n_test, law)`:
/// two-sided KS distance and one-sided excess below `1.36/√R`.
fn coverage_law(cfg: &VerifyConfig) -> Result<Tally> {
    let mut t = Tally::default();
    let (n, n_test) = (1000usize, 5000usize);
    let target = TargetGuarantee::Tolerance { eps: 0.1, delta: 0.1 };
    let pool = gen_synthetic(n + n_test, cfg.seed);
    let reports = run_trials(
        &ConstantInterval::new(0.0, 1.0),
        &pool,
        TrialConfig {
            n,
            n_test,
            trials: cfg.trials,
            master_seed: cfg.seed,
            workers: 0,
        },
        target,
    )?;
    let index = calibration_index(n as u64, target)?;
    let law = BetaParams::new(index as f64, (n as u64 + 1 - index) as f64)?;
    let s = summarize(&reports, law, 0.1, 0.1, n_test);
    let crit = 1.36 / (cfg.trials as f64).sqrt();
    t.note(format!("ks {:.4}, excess {:.4}, critical {crit:.4}", s.ks_distance, s.ks_excess));
    t.check(s.ks_distance < crit, || format!("KS distance {} >= {crit}", s.ks_distance));
    t.check(s.ks_excess < crit, || format!("one-sided excess {} >= {crit}", s.ks_excess));
    Ok(t)
}

/// Binomial p-values are super-uniform at `R(λ) = ε`, and fixed-sequence
/// testing keeps the family-wise error rate at `δ`.
fn pvalues(cfg: &VerifyConfig) -> Result<Tally> {
    let mut t = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa5a5);
    let (n, eps) = (50usize, 0.1);
    let m = cfg.worlds;
    let mut ps = Vec::with_capacity(m);
    for _ in 0..m {
        // U(0,1) scores: R(0.9) = P[score > 0.9] = ε exactly
        let curves: Vec<LossCurve> = (0..n).map(|_| LossCurve::zero_one(rng.random())).collect();
        ps.push(ltt_pvalues(&[1.0 - eps], &curves, eps)?.pvals[0]);
    }
    for i in 1..=99 {
        let u = i as f64 / 100.0;
        let freq = ps.iter().filter(|&&p| p <= u).count() as f64 / m as f64;
        let sigma = (u * (1.0 - u) / m as f64).sqrt();
        t.check(freq <= u + 3.0 * sigma, || format!("P[p <= {u}] = {freq}"));
    }

    let (n, delta) = (100usize, 0.1);
    let worlds = (m / 10).max(100);
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let mut errors = 0usize;
    for _ in 0..worlds {
        let curves: Vec<LossCurve> = (0..n).map(|_| LossCurve::zero_one(rng.random())).collect();
        let sel = ltt_fixed_sequence(&ltt_pvalues(&grid, &curves, eps)?, delta);
        // R(λ) = 1 - λ exceeds ε exactly for grid points below index 90
        if sel.len() > grid.len() - 90 {
            errors += 1;
        }
    }
    let fwer = errors as f64 / worlds as f64;
    let sigma = (delta * (1.0 - delta) / worlds as f64).sqrt();
    t.note(format!("fwer {fwer:.4} over {worlds} worlds"));
    t.check(fwer <= delta + 3.0 * sigma, || format!("FWER {fwer}"));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyConfig {
        VerifyConfig {
            seed: 1,
            trials: 200,
            cases: 200,
            worlds: 2000,
        }
    }

    #[test]
    fn clean_build_passes() {
        for suite in Suite::ALL {
            let r = run_suite(suite, &quick(), &Calibrators::default()).unwrap();
            assert!(r.passed, "{suite}: {:?}", r.notes);
            assert!(r.checks > 0);
        }
    }

    #[test]
    fn off_by_one_q_hat_is_caught() {
        fn shifted(s: &NonconformityScores, alpha: f64) -> Result<CalibrationResult> {
            let mut r = q_hat(s, alpha)?;
            r.order_index += 1;
            r.lambda_hat = s.order_stat(r.order_index);
            Ok(r)
        }
        let cal = Calibrators { q_hat: shifted, ..Default::default() };
        let r = run_suite(Suite::Equivalence, &quick(), &cal).unwrap();
        assert!(!r.passed);
        assert!(r.failures > 0);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }
}
