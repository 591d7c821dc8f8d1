// Repeated calibration/test splits on the synthetic benchmark, compared
// with the beta-binomial law of the test coverage.
//
// `cargo run --release --example synthetic_experiment -- 1000` runs the
// full 1000 trials; the default is 100.

use conformal_kit::data::{run_experiment, ExperimentConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    run_with(trials)
}

fn run_with(trials: usize) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig {
        trials,
        master_seed: 2024,
        ..Default::default()
    };
    let run = run_experiment(&cfg)?;
    let s = &run.summary;
    println!("selected quantile levels {:?}", run.tune.selected);
    println!(
        "R = {}: mean coverage {:.4}, delta_hat {:.3}, delta_bar {:.3}, KS {:.4}, mean length {:.3}",
        s.trials, s.c_bar, s.delta_hat, s.delta_bar, s.ks_distance, s.mean_length
    );
    println!("reference law Beta({}, {}), mean {:.4}", s.law.a, s.law.b, s.law.mean());
    Ok(())
}

fn main() {
    run_example().expect("synthetic_experiment example failed");
}
