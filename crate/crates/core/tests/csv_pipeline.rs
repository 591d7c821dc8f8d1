use conformal_kit::calibration::TargetGuarantee;
use conformal_kit::data::{gen_synthetic, load_csv, run_experiment, standardize, write_csv, DataSource, ExperimentConfig};
use conformal_kit::Error;
use std::path::PathBuf;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn reads_fixture() {
    let d = load_csv(fixture("small.csv"), "target").unwrap();
    assert_eq!((d.len(), d.n_features()), (5, 2));
    assert_eq!(d.feature_names(), &["x1", "x2"]);
    assert_eq!(d.labels()[2], 3.75);
}

#[test]
fn bad_fixtures_name_the_row() {
    assert!(matches!(load_csv(fixture("ragged.csv"), "target"), Err(Error::Parse { row: 2, .. })));
    assert!(matches!(load_csv(fixture("non_numeric.csv"), "target"), Err(Error::Parse { row: 2, .. })));
    assert!(load_csv(fixture("small.csv"), "label").is_err());
}

#[test]
fn standardize_fixture_halves() {
    let d = load_csv(fixture("small.csv"), "target").unwrap();
    let (train, rest) = (d.subset(&[0, 1, 2]), d.subset(&[3, 4]));
    let (t, r, stats) = standardize(&train, &rest).unwrap();
    let (m, s) = t.feature_moments();
    for j in 0..2 {
        assert!(m[j].abs() < 1e-12);
        assert!((s[j] * s[j] - 1.0).abs() < 1e-12);
    }
    // x1 of the held-out rows uses the training mean 1.5 and sd sqrt(2/3)
    assert!((r.row(0)[0] - 2.0 / (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert_eq!(stats.label_scale, 2.5);
}

#[test]
fn experiment_from_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synthetic.csv");
    let data = gen_synthetic(1000, 21);
    write_csv(&data, &path).unwrap();
    assert_eq!(load_csv(&path, "y").unwrap(), data);

    let cfg = ExperimentConfig {
        source: DataSource::Csv { path, label_col: "y".into() },
        trials: 40,
        target: TargetGuarantee::Marginal { alpha: 0.2 },
        k_neighbors: 20,
        folds: 4,
        master_seed: 1,
        ..Default::default()
    };
    let run = run_experiment(&cfg).unwrap();
    assert_eq!((run.summary.n, run.summary.n_test), (400, 200));
    assert_eq!(run.reports.len(), 40);
    // Beta(⌈0.8·401⌉, ⌊0.2·401⌋) = Beta(321, 80)
    assert_eq!((run.summary.law.a, run.summary.law.b), (321.0, 80.0));
    assert!((run.summary.c_bar - 0.8).abs() < 0.05);
}
