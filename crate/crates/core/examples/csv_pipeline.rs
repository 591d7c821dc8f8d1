// The experiment on a CSV file: write a dataset, read it back, standardize
// on the training part and run the repeated splits.

use conformal_kit::calibration::TargetGuarantee;
use conformal_kit::data::{gen_synthetic, load_csv, run_experiment, write_csv, DataSource, ExperimentConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("conformal-kit-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("data.csv");
    write_csv(&gen_synthetic(1500, 11), &path)?;
    let data = load_csv(&path, "y")?;
    println!("{} rows, {} feature(s)", data.len(), data.n_features());

    let cfg = ExperimentConfig {
        source: DataSource::Csv {
            path: path.clone(),
            label_col: "y".into(),
        },
        trials: 50,
        target: TargetGuarantee::Marginal { alpha: 0.1 },
        k_neighbors: 30,
        folds: 5,
        master_seed: 5,
        ..Default::default()
    };
    let run = run_experiment(&cfg)?;
    let s = &run.summary;
    println!(
        "n = {}, n_test = {}: mean coverage {:.4} (target at least 0.9), mean length {:.3}",
        s.n, s.n_test, s.c_bar, s.mean_length
    );
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn main() {
    run_example().expect("csv_pipeline example failed");
}
