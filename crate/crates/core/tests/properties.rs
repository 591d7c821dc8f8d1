use conformal_kit::calibration::TargetGuarantee;
use conformal_kit::data::{gen_synthetic, run_trials, summarize, TrialConfig};
use conformal_kit::dists::{BetaBinParams, BetaBinomial, BetaParams};
use conformal_kit::predictors::{fit_knn_quantile, ConstantInterval, IntervalPredictor, KnnQuantileConfig};

fn mean_coverage(base: &dyn IntervalPredictor, seed: u64) -> (f64, f64) {
    let (n, n_test, trials) = (1000, 5000, 300);
    let pool = gen_synthetic(n + n_test, seed);
    let target = TargetGuarantee::Tolerance { eps: 0.1, delta: 0.1 };
    let cfg = TrialConfig { n, n_test, trials, master_seed: seed, workers: 0 };
    let reports = run_trials(base, &pool, cfg, target).unwrap();
    let law = BetaParams::new(913.0, 88.0).unwrap();
    let s = summarize(&reports, law, 0.1, 0.1, n_test);
    (s.c_bar, s.mean_length)
}

#[test]
fn validity_does_not_depend_on_the_base_predictor() {
    let law = BetaParams::new(913.0, 88.0).unwrap();
    let bb = BetaBinomial::new(BetaBinParams::from_law(5000, law));
    let sd = (bb.variance() / 300.0).sqrt() / 5000.0;

    let train = gen_synthetic(1000, 99);
    let knn = fit_knn_quantile(&train, KnnQuantileConfig::new(50, 0.05, 0.95).unwrap()).unwrap();
    let (good, good_len) = mean_coverage(&knn, 5);
    let (bad, bad_len) = mean_coverage(&ConstantInterval::new(0.0, 0.0), 6);
    for c in [good, bad] {
        assert!((c - law.mean()).abs() < 4.0 * sd, "C_bar {c}, expected {} ± {}", law.mean(), 4.0 * sd);
    }
    assert!(bad_len > good_len);
}
