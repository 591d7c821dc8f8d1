// Distribution of the coverage of a calibrated set: Beta for the true
// conditional coverage, beta-binomial for the coverage on a finite test set.

use conformal_kit::calibration::{wilks_interval_law, wilks_is_tolerance};
use conformal_kit::dists::{beta_quantile, BetaBinParams, BetaBinomial, BetaParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // (0.1, 0.1) tolerance calibration with n = 1000 picks order statistic 913
    let law = BetaParams::new(913.0, 88.0)?;
    println!(
        "coverage ~ Beta(913, 88): mean {:.4}, sd {:.4}, P[coverage <= 0.9] = {:.4}",
        law.mean(),
        law.variance().sqrt(),
        law.cdf(0.9)
    );
    println!("10% quantile of the coverage: {:.4}", beta_quantile(0.1, law)?);

    let test = BetaBinomial::new(BetaBinParams::from_law(5000, law));
    let t = test.lower_quantile(0.1).expect("quantile exists");
    println!(
        "on 5000 test points: mean {:.1} covered, 10% lower quantile {t} (cdf {:.4})",
        test.mean(),
        test.cdf(t as i64)
    );

    // [Y_(2), Y_(99)] from 100 draws
    let w = wilks_interval_law(100, 2, 99)?;
    println!(
        "[Y_(2), Y_(99)] of 100 draws: coverage ~ Beta({}, {}); (0.1, 0.05) tolerance: {}",
        w.a,
        w.b,
        wilks_is_tolerance(100, 2, 99, 0.1, 0.05)?
    );
    Ok(())
}

fn main() {
    run_example().expect("coverage_law example failed");
}
