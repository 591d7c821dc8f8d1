//! Aggregate coverage statistics over trials, compared with the exact
//! beta-binomial law of the test-set coverage.

use super::TrialReport;
use crate::dists::{BetaBinParams, BetaBinomial, BetaParams};
use crate::levels::scaled_floor;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// `ceil(√R)` equal-width bins spanning the observed range, so each bin
    /// is `1/√R` of that range wide.
    fn build(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                edges: vec![],
                counts: vec![],
            };
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bins = (values.len() as f64).sqrt().ceil() as usize;
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 / bins as f64 };
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self { edges, counts }
    }

    pub fn to_csv(&self) -> String {
        let total: u64 = self.counts.iter().sum();
        let mut out = String::from("bin_lo,bin_hi,count,density\n");
        for (i, &c) in self.counts.iter().enumerate() {
            let w = self.edges[i + 1] - self.edges[i];
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.edges[i],
                self.edges[i + 1],
                c,
                c as f64 / (total as f64 * w)
            ));
        }
        out
    }
}

/// Empirical and reference CDFs at one test-coverage value `covered / n_test`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EcdfRow {
    pub covered: u64,
    pub coverage: f64,
    pub empirical: f64,
    pub betabin: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub c_bar: f64,
    pub delta_hat: f64,
    pub delta_bar: f64,
    pub mean_length: f64,
    /// `sup_k |F_emp(k) - F_ref(k)|` against the beta-binomial reference.
    pub ks_distance: f64,
    /// `sup_k (F_emp(k) - F_ref(k))`; small when coverage dominates the law.
    pub ks_excess: f64,
    /// Covered-count threshold used by `delta_bar`, if the law has one.
    pub betabin_threshold: Option<u64>,
    pub law: BetaParams,
    pub n: usize,
    pub n_test: usize,
    #[serde(rename = "R")]
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip)]
    pub histogram: Histogram,
    #[serde(skip)]
    pub ecdf: Vec<EcdfRow>,
}

impl ExperimentSummary {
    pub fn ecdf_csv(&self) -> String {
        let mut out = String::from("covered,coverage,empirical_cdf,betabin_cdf,beta_cdf\n");
        for r in &self.ecdf {
            out.push_str(&format!("{},{},{},{},{}\n", r.covered, r.coverage, r.empirical, r.betabin, r.beta));
        }
        out
    }
}

/// `c_bar` is the mean coverage; `delta_hat` the fraction of trials with
/// coverage `<= 1 - eps`; `delta_bar` the fraction with covered count at or
/// below the `delta` lower quantile of `BetaBin(n_test, law)`.
pub fn summarize(reports: &[TrialReport], law: BetaParams, eps: f64, delta: f64, n_test: usize) -> ExperimentSummary {
    let r = reports.len();
    let rf = r.max(1) as f64;
    let m = n_test as u64;
    let reference = BetaBinomial::new(BetaBinParams::from_law(m, law));
    let threshold = reference.lower_quantile(delta);
    let eps_cut = scaled_floor(1.0 - eps, m);

    let c_bar = reports.iter().map(|t| t.coverage).sum::<f64>() / rf;
    let delta_hat = reports.iter().filter(|t| (t.covered as i64) <= eps_cut).count() as f64 / rf;
    let delta_bar = match threshold {
        Some(t) => reports.iter().filter(|t_| t_.covered <= t).count() as f64 / rf,
        None => 0.0,
    };
    let mean_length = reports.iter().map(|t| t.avg_length).sum::<f64>() / rf;

    let mut counts = vec![0u64; n_test + 1];
    for t in reports {
        counts[t.covered as usize] += 1;
    }
    let (mut ks, mut excess, mut cum) = (0.0f64, 0.0f64, 0u64);
    let (lo_seen, hi_seen) = reports
        .iter()
        .fold((u64::MAX, 0), |(a, b), t| (a.min(t.covered), b.max(t.covered)));
    let mut ecdf = Vec::new();
    for k in 0..=m {
        cum += counts[k as usize];
        let emp = cum as f64 / rf;
        let refc = reference.cdf(k as i64);
        ks = ks.max((emp - refc).abs());
        excess = excess.max(emp - refc);
        if r > 0 && k >= lo_seen && k <= hi_seen {
            let cov = k as f64 / n_test as f64;
            ecdf.push(EcdfRow {
                covered: k,
                coverage: cov,
                empirical: emp,
                betabin: refc,
                beta: law.cdf(cov),
            });
        }
    }

    ExperimentSummary {
        c_bar,
        delta_hat,
        delta_bar,
        mean_length,
        ks_distance: ks,
        ks_excess: excess,
        betabin_threshold: threshold,
        law,
        n: reports.first().map_or(0, |t| t.n),
        n_test,
        trials: r,
        seed: None,
        histogram: Histogram::build(&reports.iter().map(|t| t.coverage).collect::<Vec<_>>()),
        ecdf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Binomial, Distribution};

    fn report(covered: u64, n_test: usize) -> TrialReport {
        TrialReport {
            trial: 0,
            lambda_hat: 0.0,
            covered,
            coverage: covered as f64 / n_test as f64,
            avg_length: 1.0,
            n: 100,
            n_test,
        }
    }

    #[test]
    fn all_covered() {
        let reps: Vec<_> = (0..10).map(|_| report(50, 50)).collect();
        let s = summarize(&reps, BetaParams::new(91.0, 10.0).unwrap(), 0.1, 0.1, 50);
        assert_eq!((s.c_bar, s.delta_hat, s.delta_bar), (1.0, 0.0, 0.0));
        assert_eq!(s.histogram.counts.iter().sum::<u64>(), 10);
    }

    #[test]
    fn direct_betabin_samples_give_delta() {
        // draw p ~ Beta(913, 88) then Bin(5000, p); δ̄ should approach δ from below
        let law = BetaParams::new(913.0, 88.0).unwrap();
        let beta = rand_distr::Beta::new(913.0, 88.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = 20_000;
        let reps: Vec<_> = (0..r)
            .map(|_| {
                let p: f64 = beta.sample(&mut rng);
                report(Binomial::new(5000, p).unwrap().sample(&mut rng), 5000)
            })
            .collect();
        let s = summarize(&reps, law, 0.1, 0.1, 5000);
        let t = s.betabin_threshold.unwrap();
        let bb = BetaBinomial::new(BetaBinParams::from_law(5000, law));
        let target = bb.cdf(t as i64);
        let sigma = (target * (1.0 - target) / r as f64).sqrt();
        assert!(target <= 0.1 && target > 0.09);
        assert!((s.delta_bar - target).abs() < 4.0 * sigma, "{} vs {target}", s.delta_bar);
        assert!(s.ks_distance < 1.36 / (r as f64).sqrt());
        assert!((s.c_bar - 913.0 / 1001.0).abs() < 4.0 * (bb.variance() / r as f64).sqrt() / 5000.0);
    }

    #[test]
    fn histogram_shape() {
        let h = Histogram::build(&[0.0, 0.5, 1.0, 1.0]);
        assert_eq!(h.counts, vec![1, 3]);
        assert_eq!(h.edges, vec![0.0, 0.5, 1.0]);
        assert!(h.to_csv().starts_with("bin_lo,bin_hi,count,density\n0,0.5,1,0.5\n"));
    }
}
