// Marginal and tolerance calibration of a set of scores, and the level that
// converts one guarantee into the other.

use conformal_kit::calibration::{
    alpha_given_tolerance, p_hat, q_hat, tolerance_delta_given_alpha, NonconformityScores,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scores = NonconformityScores::new((0..1000).map(|_| rng.random::<f64>()).collect())?;

    let marginal = q_hat(&scores, 0.1)?;
    println!(
        "alpha = 0.1: lambda = {:.4} (order statistic {}), coverage law Beta{:?}",
        marginal.lambda_hat,
        marginal.order_index,
        marginal.law.map(|l| (l.a, l.b))
    );

    let tol = p_hat(&scores, 0.1, 0.1)?;
    println!(
        "(eps, delta) = (0.1, 0.1): lambda = {:.4} (order statistic {})",
        tol.lambda_hat, tol.order_index
    );

    let dual = alpha_given_tolerance(1000, 0.1, 0.1)?;
    println!(
        "same threshold as alpha = {}/{} = {:.4}, coverage {:.2}%",
        dual.numerator,
        dual.denominator,
        dual.alpha(),
        100.0 * dual.coverage()
    );
    let same = q_hat(&scores, dual.alpha())?;
    assert_eq!(same.lambda_hat, tol.lambda_hat);

    let delta = tolerance_delta_given_alpha(1000, 0.1, 0.1)?;
    println!("the alpha = 0.1 threshold is an (0.1, {delta:.3}) tolerance region");

    let tiny = NonconformityScores::new(vec![0.3, 0.1, 0.2])?;
    println!("n = 3, alpha = 0.1: lambda = {} (full label space)", q_hat(&tiny, 0.1)?.lambda_hat);
    Ok(())
}

fn main() {
    run_example().expect("calibrate_scores example failed");
}
