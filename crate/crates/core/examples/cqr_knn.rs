// Conformalized quantile regression around a k-nearest-neighbour quantile
// predictor, with the nominal quantile levels tuned by cross-validation.

use conformal_kit::calibration::{q_hat, NonconformityScores, TargetGuarantee};
use conformal_kit::data::gen_synthetic;
use conformal_kit::predictors::{
    cqr_score, cqr_set, default_level_grid, fit_knn_quantile, tune_nominal_quantiles, IntervalPredictor,
    KnnQuantileConfig,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let train = gen_synthetic(600, 1);
    let cal = gen_synthetic(500, 2);
    let test = gen_synthetic(2000, 3);
    let target = TargetGuarantee::Marginal { alpha: 0.1 };

    let tune = tune_nominal_quantiles(&train, &default_level_grid(), 40, target, 5, 4)?;
    for (lv, len) in tune.levels.iter().zip(&tune.mean_lengths) {
        println!("levels ({:.3}, {:.3}): mean calibrated length {len:.3}", lv.0, lv.1);
    }
    let (lo, hi) = tune.selected;
    let base = fit_knn_quantile(&train, KnnQuantileConfig::new(40, lo, hi)?)?;

    let scores: Vec<f64> = (0..cal.len()).map(|i| cqr_score(&base, cal.row(i), cal.labels()[i])).collect();
    let lam = q_hat(&NonconformityScores::new(scores)?, 0.1)?.lambda_hat;
    println!("selected ({lo:.3}, {hi:.3}); calibrated expansion {lam:.4}");

    let covered = (0..test.len())
        .filter(|&i| cqr_set(&base, lam, test.row(i)).contains(test.labels()[i]))
        .count();
    println!("test coverage {:.4}", covered as f64 / test.len() as f64);
    for x in [1.5, 3.0, 4.5] {
        let (l, h) = base.predict(&[x]);
        println!("x = {x}: base [{l:.3}, {h:.3}], calibrated {:?}", cqr_set(&base, lam, &[x]));
    }
    Ok(())
}

fn main() {
    run_example().expect("cqr_knn example failed");
}
