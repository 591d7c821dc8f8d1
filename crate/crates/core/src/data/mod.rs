//! Datasets, synthetic data, the repeated split/calibrate/test harness and
//! its coverage statistics.

mod experiment;
mod summary;
mod synthetic;
mod tables;
mod trials;

pub use experiment::{derive_seed, run_experiment, DataSource, ExperimentConfig, ExperimentRun};
pub use summary::{summarize, EcdfRow, ExperimentSummary, Histogram};
pub use synthetic::{gen_synthetic, gen_synthetic_with, SyntheticTerms};
pub use tables::{render_table1, render_table2, table1, table2, Rounding, Table1, Table2, TABLE_LEVELS, TABLE_NS};
pub use trials::{run_trials, run_trials_with, TrialConfig, TrialReport};

use crate::error::{Error, Result};
use std::path::Path;

/// Row-major feature matrix with one real label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<f64>,
    feature_names: Vec<String>,
    label_name: String,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let names = (0..dim).map(|j| format!("x{j}")).collect();
        Self::from_rows(rows, labels, names, "y".into())
    }

    fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<f64>, feature_names: Vec<String>, label_name: String) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Invalid(format!("{} feature rows but {} labels", rows.len(), labels.len())));
        }
        let dim = feature_names.len();
        if dim == 0 {
            return Err(Error::Invalid("a dataset needs at least one feature column".into()));
        }
        let mut features = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Parse {
                    row: i + 1,
                    msg: format!("expected {dim} features, found {}", row.len()),
                });
            }
            features.extend(row);
        }
        Ok(Self {
            features,
            dim,
            labels,
            feature_names,
            label_name,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.dim);
        for &i in rows {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            features,
            dim: self.dim,
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            label_name: self.label_name.clone(),
        }
    }

    /// Column means and population standard deviations.
    pub fn feature_moments(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len().max(1) as f64;
        let mut means = vec![0.0; self.dim];
        for i in 0..self.len() {
            for (m, v) in means.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut sds = vec![0.0; self.dim];
        for i in 0..self.len() {
            for ((s, v), m) in sds.iter_mut().zip(self.row(i)).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        sds.iter_mut().for_each(|s| *s = (*s / n).sqrt());
        (means, sds)
    }
}

/// Reads a CSV with a header row; `label_col` names the label column and
/// every other column becomes a feature.
pub fn load_csv(path: impl AsRef<Path>, label_col: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_col)
        .ok_or_else(|| Error::Invalid(format!("no column named {label_col:?}")))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row: row_no,
                msg: format!("expected {} cells, found {}", header.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(feature_names.len());
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: row_no,
                msg: format!("column {:?}: not a number: {cell:?}", header[j]),
            })?;
            if j == label_idx {
                labels.push(v);
            } else {
                row.push(v);
            }
        }
        rows.push(row);
    }
    Dataset::from_rows(rows, labels, feature_names, label_col.to_owned())
}

/// Writes features then the label column, with a header.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = data.feature_names.clone();
    header.push(data.label_name.clone());
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(data.labels[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Transform fitted on the proper training part.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Mean absolute training label; labels are divided by it.
    pub label_scale: f64,
    /// Zero-variance feature columns, centred but left unscaled.
    pub constant_columns: Vec<usize>,
}

impl Standardization {
    pub fn apply(&self, data: &Dataset) -> Dataset {
        let mut out = data.clone();
        for row in out.features.chunks_exact_mut(out.dim) {
            for (j, v) in row.iter_mut().enumerate() {
                *v -= self.means[j];
                if self.sds[j] > 0.0 {
                    *v /= self.sds[j];
                }
            }
        }
        out.labels.iter_mut().for_each(|y| *y /= self.label_scale);
        out
    }
}

/// Standardizes features to zero mean and unit variance and divides labels
/// by their mean absolute value, all with statistics of `train` only.
pub fn standardize(train: &Dataset, rest: &Dataset) -> Result<(Dataset, Dataset, Standardization)> {
    if train.is_empty() {
        return Err(Error::Invalid("cannot standardize with an empty training part".into()));
    }
    if train.dim != rest.dim {
        return Err(Error::Invalid("feature counts differ".into()));
    }
    let (means, sds) = train.feature_moments();
    let label_scale = train.labels.iter().map(|y| y.abs()).sum::<f64>() / train.len() as f64;
    if label_scale <= 0.0 {
        return Err(Error::Invalid("training labels are all zero".into()));
    }
    let constant_columns = sds.iter().enumerate().filter(|(_, &s)| s <= 0.0).map(|(j, _)| j).collect();
    let stats = Standardization {
        means,
        sds,
        label_scale,
        constant_columns,
    };
    Ok((stats.apply(train), stats.apply(rest), stats))
}
