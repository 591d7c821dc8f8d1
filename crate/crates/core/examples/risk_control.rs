// Conformal risk control, upper-confidence-bound calibration and
// learn-then-test on 0-1 losses, which reproduce the split calibrators,
// and CRC on a graded loss.

use conformal_kit::calibration::{p_hat, q_hat, NonconformityScores};
use conformal_kit::nested::LambdaDomain;
use conformal_kit::risk::{
    crc_lambda, ltt_bonferroni, ltt_fixed_sequence, ltt_pvalues, ucb_lambda, LossCurve, UcbMethod,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let raw: Vec<f64> = (0..500).map(|_| rng.random::<f64>() * 4.0).collect();
    let curves: Vec<LossCurve> = raw.iter().map(|&s| LossCurve::zero_one(s)).collect();
    let scores = NonconformityScores::new(raw)?;
    let dom = LambdaDomain::EXTENDED_REAL;

    let crc = crc_lambda(&curves, 1.0, 0.1, dom)?;
    println!("CRC(alpha=0.1) = {crc:.4}, split = {:.4}", q_hat(&scores, 0.1)?.lambda_hat);

    let ucb = ucb_lambda(&curves, 0.1, 0.1, UcbMethod::ExactBinomial, dom)?;
    let hoeff = ucb_lambda(&curves, 0.1, 0.1, UcbMethod::Hoeffding { bound: 1.0 }, dom)?;
    println!(
        "UCB(0.1, 0.1): exact binomial {ucb:.4}, Hoeffding {hoeff:.4}, tolerance calibrator {:.4}",
        p_hat(&scores, 0.1, 0.1)?.lambda_hat
    );

    let grid: Vec<f64> = (0..=400).map(|i| i as f64 / 100.0).collect();
    let pv = ltt_pvalues(&grid, &curves, 0.1)?;
    let fixed = ltt_fixed_sequence(&pv, 0.1);
    let bonf = ltt_bonferroni(&pv, 0.1);
    println!(
        "LTT on a {}-point grid: fixed sequence keeps {} values from {:?}, Bonferroni keeps {}",
        grid.len(),
        fixed.len(),
        fixed.first(),
        bonf.len()
    );

    // loss 1 above the interval, 0.5 within 1 of it, 0 inside: a graded miss
    let graded: Vec<LossCurve> = scores
        .sorted()
        .iter()
        .map(|&s| LossCurve::step(1.0, vec![(s - 1.0, 0.5), (s, 0.0)], Some(1.0)))
        .collect::<Result<_, _>>()?;
    println!("CRC on graded loss, alpha = 0.1: {:.4}", crc_lambda(&graded, 1.0, 0.1, dom)?);
    Ok(())
}

fn main() {
    run_example().expect("risk_control example failed");
}
