//! Binomial CDF and the two inversions used by the calibrators: the largest
//! count with tail mass at most `δ`, and the smallest success probability
//! driving a fixed lower tail down to `δ`.

use super::special::{dbinom_raw, CompensatedSum};
use super::SupK;
use crate::error::{check_unit_closed, check_unit_open, Error, Result};

const BISECTION_CAP: usize = 200;

fn check_trials(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Invalid("number of trials must be at least 1".into()));
    }
    Ok(())
}

/// `P[Bin(n, p) <= k]`.
///
/// Any integer `k` is accepted: negative counts give 0 and `k >= n` gives 1.
/// The sum runs from the anchor term `k` (or `k + 1` for the complementary
/// upper tail) outwards, where terms decay monotonically, and stops once
/// they no longer change the compensated total.
pub fn binom_cdf(k: i64, n: u64, p: f64) -> Result<f64> {
    check_trials(n)?;
    check_unit_closed("p", p)?;
    Ok(cdf_unchecked(k, n, p))
}

pub(crate) fn cdf_unchecked(k: i64, n: u64, p: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let k = k as u64;
    if k >= n {
        return 1.0;
    }
    if p == 0.0 {
        return 1.0;
    }
    if p == 1.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    let nf = n as f64;
    if (k as f64) <= nf * p {
        lower_tail(k, n, p, q)
    } else {
        1.0 - upper_tail(k + 1, n, p, q)
    }
}

// sum_{i<=k} pmf(i) for k at or below the mean; terms shrink as i decreases.
fn lower_tail(k: u64, n: u64, p: f64, q: f64) -> f64 {
    let nf = n as f64;
    let mut term = dbinom_raw(k as f64, nf, p, q);
    let mut acc = CompensatedSum::new();
    acc.add(term);
    let ratio = q / p;
    let mut i = k;
    while i > 0 && term > 0.0 {
        term *= (i as f64) / (nf - i as f64 + 1.0) * ratio;
        i -= 1;
        let before = acc.value();
        acc.add(term);
        if acc.value() == before {
            break;
        }
    }
    acc.value()
}

// sum_{i>=start} pmf(i) for start above the mean; terms shrink as i grows.
fn upper_tail(start: u64, n: u64, p: f64, q: f64) -> f64 {
    let nf = n as f64;
    let mut term = dbinom_raw(start as f64, nf, p, q);
    let mut acc = CompensatedSum::new();
    acc.add(term);
    let ratio = p / q;
    let mut i = start;
    while i < n && term > 0.0 {
        term *= (nf - i as f64) / (i as f64 + 1.0) * ratio;
        i += 1;
        let before = acc.value();
        acc.add(term);
        if acc.value() == before {
            break;
        }
    }
    acc.value()
}

/// `sup{k in 0..=n : Bin(k; n, eps) <= delta}` by binary search over `k`.
pub fn binom_sup_k(n: u64, eps: f64, delta: f64) -> Result<SupK> {
    check_trials(n)?;
    check_unit_open("eps", eps)?;
    check_unit_open("delta", delta)?;
    Ok(sup_k_unchecked(n, eps, delta))
}

pub(crate) fn sup_k_unchecked(n: u64, eps: f64, delta: f64) -> SupK {
    if cdf_unchecked(0, n, eps) > delta {
        return SupK::Infeasible;
    }
    // invariant: cdf(lo) <= delta, cdf(hi) > delta (cdf(n) = 1 > delta)
    let (mut lo, mut hi) = (0u64, n);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if cdf_unchecked(mid as i64, n, eps) <= delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    SupK::Value(lo)
}

/// `inf{p : Bin(k; n, p) <= delta}`.
///
/// The CDF is strictly decreasing in `p` for `0 <= k < n`, so the infimum is
/// the root of `Bin(k; n, p) = delta`, located by bisection. The returned
/// value is the upper end of the final bracket, so `Bin(k; n, result) <= delta`
/// always holds. `k < 0` gives 0 and `k >= n` gives the limit 1.
pub fn binom_inf_p(k: i64, n: u64, delta: f64) -> Result<f64> {
    check_trials(n)?;
    check_unit_open("delta", delta)?;
    Ok(inf_p_unchecked(k, n, delta))
}

pub(crate) fn inf_p_unchecked(k: i64, n: u64, delta: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    if k as u64 >= n {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 {
            break;
        }
        if cdf_unchecked(k, n, mid) <= delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
