//! The `conformal-kit` command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or parameters,
//! 3 a verification suite failed.

use crate::calibration::{calibrate, CalibrationResult, Dual, MarginalBounds, NonconformityScores, TargetGuarantee};
use crate::data::{
    render_table1, render_table2, run_experiment, table1, table2, DataSource, ExperimentConfig, ExperimentRun, Rounding,
    TABLE_NS,
};
use crate::dists::BetaParams;
use crate::error::{Error, Result};
use crate::nested::LambdaDomain;
use crate::predictors::default_level_grid;
use crate::risk::{crc_lambda, ltt_fixed_sequence, ltt_pvalues, score_grid, ucb_lambda, LossCurve, UcbMethod};
use crate::verify::{run_all, run_suite, Calibrators, VerifyConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const DEFAULT_SEED: u64 = 20_240_501;

#[derive(Debug, Parser)]
#[command(name = "conformal-kit", version, about = "Split conformal calibration, tolerance regions and coverage experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate a threshold from a file of scores (one per line).
    Calibrate(CalibrateArgs),
    /// Print the k* and smallest-epsilon lookup tables.
    Tables(TablesArgs),
    /// Run the repeated-split CQR experiment on synthetic or CSV data.
    Experiment(ExperimentArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Split,
    Crc,
    Ucb,
    Ltt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value_t = Method::Split)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableChoice {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoundingArg {
    Truncate,
    Up,
    HalfUp,
}

impl From<RoundingArg> for Rounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Truncate => Rounding::Truncate,
            RoundingArg::Up => Rounding::Up,
            RoundingArg::HalfUp => Rounding::HalfUp,
        }
    }
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    #[arg(long, value_enum, default_value_t = TableChoice::All)]
    pub table: TableChoice,
    /// Calibration set sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    #[arg(long, value_enum, default_value_t = RoundingArg::Truncate)]
    pub rounding: RoundingArg,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// CSV file with a header row; synthetic data when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    pub label_col: String,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Marginal target; overrides --eps/--delta.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 50)]
    pub k_neighbors: usize,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, env = "CONFORMAL_KIT_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Directory for summary.json, trials.csv, histogram.csv, ecdf.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Stdout: the JSON summary or the per-trial CSV.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// A suite name or "all".
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1000)]
    pub cases: usize,
    #[arg(long, default_value_t = 20_000)]
    pub worlds: usize,
    #[arg(long, env = "CONFORMAL_KIT_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

/// Finite values as numbers, infinities as the strings `"+inf"`/`"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtReal(pub f64);

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            f64::INFINITY => s.serialize_str("+inf"),
            f64::NEG_INFINITY => s.serialize_str("-inf"),
            v => s.serialize_f64(v),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DualOut {
    /// Marginal level equivalent to the requested tolerance region.
    Alpha {
        alpha: f64,
        numerator: u64,
        denominator: u64,
        coverage: f64,
        full_set: bool,
    },
    /// Tolerance guarantees certified by the marginal calibrator.
    Tolerance {
        delta: f64,
        eps_min: f64,
        eps: f64,
        delta_min: f64,
    },
}

#[derive(Debug, Serialize)]
pub struct CalibrateOutput {
    pub method: &'static str,
    pub n: u64,
    pub lambda_hat: ExtReal,
    pub order_index: u64,
    pub full_set: bool,
    pub law: Option<BetaParams>,
    pub dual: DualOut,
    pub marginal_bounds: MarginalBounds,
}

pub fn read_scores(path: &Path) -> Result<NonconformityScores> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        values.push(line.parse::<f64>().map_err(|_| Error::Parse {
            row: i + 1,
            msg: format!("not a number: {line:?}"),
        })?);
    }
    NonconformityScores::new(values)
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Split => "split",
        Method::Crc => "crc",
        Method::Ucb => "ucb",
        Method::Ltt => "ltt",
    }
}

fn need(v: Option<f64>, flag: &str, method: Method) -> Result<f64> {
    v.ok_or_else(|| Error::Invalid(format!("--method {} needs --{flag}", method_name(method))))
}

pub fn cmd_calibrate(args: &CalibrateArgs) -> Result<CalibrateOutput> {
    let scores = read_scores(&args.scores)?;
    let target = match (args.method, args.alpha) {
        (Method::Split, Some(alpha)) | (Method::Crc, Some(alpha)) => TargetGuarantee::Marginal { alpha },
        (Method::Crc, None) => return Err(Error::Invalid("--method crc needs --alpha".into())),
        (m, _) => TargetGuarantee::Tolerance {
            eps: need(args.eps, "eps", m)?,
            delta: need(args.delta, "delta", m)?,
        },
    };
    let split = calibrate(&scores, target)?;
    let curves = || scores.sorted().iter().map(|&s| LossCurve::zero_one(s)).collect::<Vec<_>>();
    let dom = LambdaDomain::EXTENDED_REAL;
    let lam = match (args.method, target) {
        (Method::Split, _) => split.lambda_hat,
        (Method::Crc, TargetGuarantee::Marginal { alpha }) => crc_lambda(&curves(), 1.0, alpha, dom)?,
        (Method::Ucb, TargetGuarantee::Tolerance { eps, delta }) => {
            ucb_lambda(&curves(), eps, delta, UcbMethod::ExactBinomial, dom)?
        }
        (Method::Ltt, TargetGuarantee::Tolerance { eps, delta }) => {
            let grid = ltt_pvalues(&score_grid(scores.sorted()), &curves(), eps)?;
            ltt_fixed_sequence(&grid, delta).first().copied().unwrap_or(f64::INFINITY)
        }
        _ => unreachable!("target chosen from the method above"),
    };
    describe(args.method, &scores, split, lam, args)
}

fn describe(
    method: Method,
    scores: &NonconformityScores,
    split: CalibrationResult,
    lam: f64,
    args: &CalibrateArgs,
) -> Result<CalibrateOutput> {
    let n = split.n;
    // the risk-control thresholds coincide with the split one for 0-1 losses;
    // fall back to the first order statistic equal to `lam` otherwise
    let order_index = if lam == split.lambda_hat {
        split.order_index
    } else if lam == f64::INFINITY {
        n + 1
    } else {
        scores.sorted().partition_point(|&v| v < lam) as u64 + 1
    };
    let law = (order_index <= n).then(|| BetaParams {
        a: order_index as f64,
        b: (n + 1 - order_index) as f64,
    });
    let dual = match split.dual {
        Dual::Alpha(d) => DualOut::Alpha {
            alpha: d.alpha(),
            numerator: d.numerator,
            denominator: d.denominator,
            coverage: d.coverage(),
            full_set: d.full_set,
        },
        Dual::Tolerance { .. } => {
            let delta = args.delta.unwrap_or(0.1);
            let eps = args.eps.unwrap_or(0.1);
            DualOut::Tolerance {
                delta,
                eps_min: split.dual.eps_min(delta).expect("marginal dual")?,
                eps,
                delta_min: split.dual.delta_min(eps).expect("marginal dual")?,
            }
        }
    };
    Ok(CalibrateOutput {
        method: method_name(method),
        n,
        lambda_hat: ExtReal(lam),
        order_index,
        full_set: order_index > n,
        law,
        dual,
        marginal_bounds: split.marginal_bounds,
    })
}

fn calibrate_csv(o: &CalibrateOutput) -> String {
    let lam = match o.lambda_hat.0 {
        f64::INFINITY => "+inf".to_string(),
        f64::NEG_INFINITY => "-inf".to_string(),
        v => v.to_string(),
    };
    let (a, b) = o.law.map_or((String::new(), String::new()), |l| (l.a.to_string(), l.b.to_string()));
    format!(
        "method,n,lambda_hat,order_index,full_set,law_a,law_b,marginal_lo,marginal_hi\n{},{},{},{},{},{},{},{},{}\n",
        o.method, o.n, lam, o.order_index, o.full_set, a, b, o.marginal_bounds.lo, o.marginal_bounds.hi
    )
}

pub fn cmd_tables(args: &TablesArgs) -> Result<String> {
    let ns = args.n.clone().unwrap_or_else(|| TABLE_NS.to_vec());
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::Invalid("table sizes must be positive".into()));
    }
    let mut out = String::new();
    if matches!(args.table, TableChoice::One | TableChoice::All) {
        out.push_str(&render_table1(&table1(&ns)?));
    }
    if matches!(args.table, TableChoice::All) {
        out.push('\n');
    }
    if matches!(args.table, TableChoice::Two | TableChoice::All) {
        out.push_str(&render_table2(&table2(&ns)?, args.rounding.into()));
    }
    Ok(out)
}

pub fn experiment_config(args: &ExperimentArgs) -> ExperimentConfig {
    ExperimentConfig {
        source: match &args.data {
            Some(path) => DataSource::Csv {
                path: path.clone(),
                label_col: args.label_col.clone(),
            },
            None => DataSource::Synthetic,
        },
        n_train: args.n_train,
        n: args.n,
        n_test: args.n_test,
        trials: args.trials,
        target: match args.alpha {
            Some(alpha) => TargetGuarantee::Marginal { alpha },
            None => TargetGuarantee::Tolerance {
                eps: args.eps,
                delta: args.delta,
            },
        },
        k_neighbors: args.k_neighbors,
        folds: args.folds,
        candidates: default_level_grid(),
        master_seed: args.seed,
        workers: args.workers,
    }
}

#[derive(Serialize)]
struct ExperimentJson<'a> {
    #[serde(flatten)]
    summary: &'a crate::data::ExperimentSummary,
    selected_levels: (f64, f64),
}

fn trials_csv(run: &ExperimentRun) -> String {
    let mut out = String::from("trial,lambda_hat,covered,coverage,avg_length\n");
    for t in &run.reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            t.trial, t.lambda_hat, t.covered, t.coverage, t.avg_length
        ));
    }
    out
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<String> {
    let run = run_experiment(&experiment_config(args))?;
    let json = serde_json::to_string_pretty(&ExperimentJson {
        summary: &run.summary,
        selected_levels: run.tune.selected,
    })? + "\n";
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.json"), &json)?;
        fs::write(dir.join("trials.csv"), trials_csv(&run))?;
        fs::write(dir.join("histogram.csv"), run.summary.histogram.to_csv())?;
        fs::write(dir.join("ecdf.csv"), run.summary.ecdf_csv())?;
        fs::write(dir.join("tuning.json"), serde_json::to_string_pretty(&run.tune)? + "\n")?;
    }
    Ok(match args.format {
        Format::Json => json,
        Format::Csv => trials_csv(&run),
    })
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(bool, String)> {
    let cfg = VerifyConfig {
        seed: args.seed,
        trials: args.trials,
        cases: args.cases,
        worlds: args.worlds,
    };
    let cal = Calibrators::default();
    let reports = if args.suite == "all" {
        run_all(&cfg, &cal)?
    } else {
        vec![run_suite(args.suite.parse()?, &cfg, &cal)?]
    };
    let ok = reports.iter().all(|r| r.passed);
    Ok((ok, serde_json::to_string_pretty(&reports)? + "\n"))
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 1,
        Error::Csv(c) if c.is_io_error() => 1,
        _ => 2,
    }
}

/// Runs a parsed command, writing results to `out`. Returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let (code, text) = match &cli.command {
        Command::Calibrate(a) => {
            let o = cmd_calibrate(a)?;
            let text = match a.format {
                Format::Json => serde_json::to_string_pretty(&o)? + "\n",
                Format::Csv => calibrate_csv(&o),
            };
            (0, text)
        }
        Command::Tables(a) => (0, cmd_tables(a)?),
        Command::Experiment(a) => (0, cmd_experiment(a)?),
        Command::Verify(a) => {
            let (ok, text) = cmd_verify(a)?;
            (if ok { 0 } else { 3 }, text)
        }
    };
    out.write_all(text.as_bytes())?;
    Ok(code)
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
