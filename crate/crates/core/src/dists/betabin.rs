use super::special::CompensatedSum;
use super::BetaBinParams;
use crate::error::{check_unit_open, Result};

/// Tabulated Beta-Binomial distribution.
///
/// The pmf is built from the term ratio
/// `pmf(i+1)/pmf(i) = (n-i)/(i+1) · (i+a)/(n-i-1+b)` relative to its mode and
/// normalized by the compensated total, so no log-beta differences enter.
#[derive(Debug, Clone)]
pub struct BetaBinomial {
    params: BetaBinParams,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl BetaBinomial {
    pub fn new(params: BetaBinParams) -> Self {
        let n = params.trials as usize;
        let (a, b) = (params.a, params.b);
        let nf = params.trials as f64;

        let mut log_unnorm = Vec::with_capacity(n + 1);
        let mut acc = 0.0_f64;
        log_unnorm.push(acc);
        for i in 0..n {
            let fi = i as f64;
            acc += ((nf - fi) / (fi + 1.0)).ln() + ((fi + a) / (nf - fi - 1.0 + b)).ln();
            log_unnorm.push(acc);
        }
        let peak = log_unnorm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_unnorm.iter().map(|l| (l - peak).exp()).collect();
        let total = weights.iter().copied().collect::<CompensatedSum>().value();
        let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();

        let mut cdf = Vec::with_capacity(n + 1);
        let mut run = CompensatedSum::new();
        for &p in &pmf {
            run.add(p);
            cdf.push(run.value().min(1.0));
        }
        cdf[n] = 1.0;
        Self { params, pmf, cdf }
    }

    pub fn params(&self) -> BetaBinParams {
        self.params
    }

    pub fn pmf(&self, k: i64) -> f64 {
        if k < 0 || k as u64 > self.params.trials {
            0.0
        } else {
            self.pmf[k as usize]
        }
    }

    pub fn cdf(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else if k as u64 >= self.params.trials {
            1.0
        } else {
            self.cdf[k as usize]
        }
    }

    /// Largest `k` with `cdf(k) <= q`, or `None` when even `cdf(0) > q`.
    pub fn lower_quantile(&self, q: f64) -> Option<u64> {
        let idx = self.cdf.partition_point(|&c| c <= q);
        idx.checked_sub(1).map(|k| k as u64)
    }

    pub fn mean(&self) -> f64 {
        let BetaBinParams { trials, a, b } = self.params;
        trials as f64 * a / (a + b)
    }

    pub fn variance(&self) -> f64 {
        let BetaBinParams { trials, a, b } = self.params;
        let n = trials as f64;
        n * a * b * (a + b + n) / ((a + b) * (a + b) * (a + b + 1.0))
    }
}

/// `P[BetaBin(trials, a, b) <= k]`.
pub fn betabin_cdf(k: i64, params: BetaBinParams) -> f64 {
    BetaBinomial::new(params).cdf(k)
}

/// Lower quantile: the largest `k` with `betabin_cdf(k) <= q`; `None` if no
/// such `k` exists.
pub fn betabin_quantile(q: f64, params: BetaBinParams) -> Result<Option<u64>> {
    check_unit_open("q", q)?;
    Ok(BetaBinomial::new(params).lower_quantile(q))
}
