//! Split conformal prediction and tolerance regions for nested prediction
//! sets, the coverage laws behind them, and their risk-control extensions.
//!
//! * [`calibration`]: marginal (`q_hat`) and tolerance (`p_hat`) calibrators
//!   and the conversions between the two guarantees.
//! * [`dists`]: binomial, beta and beta-binomial functions and inversions.
//! * [`risk`]: conformal risk control, upper-confidence-bound calibration and
//!   learn-then-test.
//! * [`predictors`]: interval base predictors and CQR.
//! * [`data`]: datasets, the synthetic benchmark and the repeated-split harness.
//! * [`verify`]: self-checks also exposed by the command-line tool.

pub mod calibration;
pub mod cli;
pub mod data;
pub mod dists;
pub mod error;
pub mod levels;
pub mod nested;
pub mod predictors;
pub mod risk;
pub mod verify;

pub use error::{Error, Result};
