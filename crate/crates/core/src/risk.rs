//! Risk control for nested sets: conformal risk control (CRC), calibration
//! from an upper confidence bound on the risk (UCB), and learn-then-test (LTT).
//!
//! Losses `ℓ_i(λ)` are non-increasing step functions of `λ`. Every infimum
//! below is taken over the step breakpoints, so results are exact. With the
//! 0-1 loss `ℓ_i(λ) = 1{r_i > λ}`, CRC at level `α` returns the same order
//! statistic as [`q_hat`](crate::calibration::q_hat) and exact-binomial UCB
//! the same as [`p_hat`](crate::calibration::p_hat).

use crate::dists::{binom_cdf_unchecked, special::CompensatedSum};
use crate::error::{check_unit_closed, check_unit_open, Error, Result};
use crate::levels::scaled_floor;
use crate::nested::LambdaDomain;
use serde::Serialize;

/// Non-increasing right-continuous step function of `λ`:
/// `initial` below the first knot, then `knots[j].1` on
/// `[knots[j].0, knots[j+1].0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCurve {
    initial: f64,
    knots: Vec<(f64, f64)>,
    bound: Option<f64>,
}

impl LossCurve {
    /// `1{score > λ}`, bounded by 1.
    pub fn zero_one(score: f64) -> Self {
        Self {
            initial: 1.0,
            knots: vec![(score, 0.0)],
            bound: Some(1.0),
        }
    }

    pub fn step(initial: f64, knots: Vec<(f64, f64)>, bound: Option<f64>) -> Result<Self> {
        let mut prev_lam = f64::NEG_INFINITY;
        let mut prev_val = initial;
        if initial.is_nan() {
            return Err(Error::Invalid("loss is NaN".into()));
        }
        for (i, &(lam, v)) in knots.iter().enumerate() {
            if lam.is_nan() || v.is_nan() {
                return Err(Error::Invalid(format!("knot {i} has a NaN")));
            }
            if i > 0 && lam <= prev_lam {
                return Err(Error::Invalid(format!("knot {i}: breakpoints must increase")));
            }
            if v > prev_val {
                return Err(Error::Invalid(format!("knot {i}: loss increases in lambda")));
            }
            prev_lam = lam;
            prev_val = v;
        }
        if let Some(b) = bound {
            if initial > b {
                return Err(Error::Invalid(format!("loss {initial} exceeds bound {b}")));
            }
        }
        Ok(Self { initial, knots, bound })
    }

    /// Step curve through `(grid[j], f(grid[j]))`. Below the first grid
    /// point the loss is `bound`, or `f(grid[0])` when unbounded.
    pub fn from_grid(grid: &[f64], f: impl Fn(f64) -> f64, bound: Option<f64>) -> Result<Self> {
        let knots: Vec<(f64, f64)> = grid.iter().map(|&l| (l, f(l))).collect();
        let initial = bound.or(knots.first().map(|k| k.1)).unwrap_or(0.0);
        Self::step(initial, knots, bound)
    }

    pub fn eval(&self, lam: f64) -> f64 {
        match self.knots.partition_point(|&(k, _)| k <= lam) {
            0 => self.initial,
            j => self.knots[j - 1].1,
        }
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.knots.iter().map(|k| k.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub r_hat: f64,
    pub n: usize,
}

impl RiskEstimate {
    /// `n · r_hat` when it is an integer, as for 0-1 losses.
    pub fn count(&self) -> Option<i64> {
        let c = self.r_hat * self.n as f64;
        let r = c.round();
        ((c - r).abs() <= 1e-9 * self.n as f64).then_some(r as i64)
    }
}

fn total_loss(curves: &[LossCurve], lam: f64) -> f64 {
    curves.iter().map(|c| c.eval(lam)).collect::<CompensatedSum>().value()
}

/// `R̂(λ)`, the mean loss.
pub fn empirical_risk(curves: &[LossCurve], lam: f64) -> Result<RiskEstimate> {
    if curves.is_empty() {
        return Err(Error::EmptyScores);
    }
    Ok(RiskEstimate {
        r_hat: total_loss(curves, lam) / curves.len() as f64,
        n: curves.len(),
    })
}

/// Where the empirical risk can change, plus the ends of `domain`, ascending.
fn candidates(curves: &[LossCurve], domain: LambdaDomain) -> Vec<f64> {
    let mut c: Vec<f64> = curves
        .iter()
        .flat_map(LossCurve::breakpoints)
        .filter(|&l| domain.contains(l))
        .chain([domain.lo, domain.hi])
        .collect();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// `inf{λ ∈ Λ : n/(n+1)·R̂(λ) + B/(n+1) <= α}`, i.e. `Σℓ_i(λ) + B <= α(n+1)`.
///
/// Returns `sup Λ` if the condition only holds there (or nowhere).
pub fn crc_lambda(curves: &[LossCurve], bound: f64, alpha: f64, domain: LambdaDomain) -> Result<f64> {
    if curves.is_empty() {
        return Err(Error::EmptyScores);
    }
    if alpha > bound {
        return Err(Error::Domain {
            name: "alpha",
            value: alpha,
            expected: "alpha <= B",
        });
    }
    if let Some(b) = curves.iter().find_map(|c| c.bound.filter(|&b| b > bound)) {
        return Err(Error::Invalid(format!("a loss curve is bounded by {b} > B = {bound}")));
    }
    let m = curves.len() as u64 + 1;
    // α(n+1) snapped to an integer when it is one, so integer totals compare exactly
    let budget = {
        let fl = scaled_floor(alpha, m);
        let x = alpha * m as f64;
        if (x - fl as f64).abs() <= 1e-9 * x.abs().max(1.0) {
            fl as f64
        } else {
            x
        }
    };
    let ok = |lam: f64| total_loss(curves, lam) + bound <= budget;
    let cand = candidates(curves, domain);
    let first = cand.partition_point(|&l| !ok(l));
    Ok(cand.get(first).copied().unwrap_or(domain.hi))
}

/// `inf{p : Bin(count; n, p) <= δ}`.
pub fn ucb_exact_binomial(count: u64, n: u64, delta: f64) -> Result<f64> {
    crate::dists::binom_inf_p(count as i64, n, delta)
}

/// One-sided Hoeffding bound `r̂ + B·sqrt(ln(1/δ)/(2n))`.
pub fn ucb_hoeffding(r_hat: f64, n: u64, delta: f64, bound: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyScores);
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain {
            name: "delta",
            value: delta,
            expected: "(0, 1]",
        });
    }
    Ok(r_hat + bound * ((1.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum UcbMethod {
    /// Binomial tail inversion; needs 0-1 losses.
    ExactBinomial,
    /// Hoeffding with losses bounded by `bound`.
    Hoeffding { bound: f64 },
}

/// `inf{λ ∈ Λ : R̂⁺(λ') <= ε for all λ' >= λ}`; `sup Λ` if never satisfied.
pub fn ucb_lambda(curves: &[LossCurve], eps: f64, delta: f64, method: UcbMethod, domain: LambdaDomain) -> Result<f64> {
    if curves.is_empty() {
        return Err(Error::EmptyScores);
    }
    check_unit_open("delta", delta)?;
    let n = curves.len() as u64;
    let ok = |lam: f64| -> Result<bool> {
        let est = empirical_risk(curves, lam)?;
        match method {
            UcbMethod::ExactBinomial => {
                check_unit_open("eps", eps)?;
                let count = est.count().ok_or_else(|| {
                    Error::Invalid("the exact binomial bound needs 0-1 losses".into())
                })?;
                // R̂⁺ <= ε  ⟺  Bin(count; n, ε) <= δ
                Ok(binom_cdf_unchecked(count, n, eps) <= delta)
            }
            UcbMethod::Hoeffding { bound } => Ok(ucb_hoeffding(est.r_hat, n, delta, bound)? <= eps),
        }
    };
    let cand = candidates(curves, domain);
    let mut best = None;
    for &lam in cand.iter().rev() {
        if !ok(lam)? {
            break;
        }
        best = Some(lam);
    }
    Ok(best.unwrap_or(domain.hi))
}

/// Binomial p-values of `H_j : R(λ_j) > ε` on an ascending grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PValueGrid {
    pub lambdas: Vec<f64>,
    pub pvals: Vec<f64>,
}

/// `p_j = Bin(n·R̂(λ_j); n, ε)` for 0-1 losses.
pub fn ltt_pvalues(grid: &[f64], curves: &[LossCurve], eps: f64) -> Result<PValueGrid> {
    check_unit_closed("eps", eps)?;
    if grid.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::Invalid("lambda grid must be strictly ascending".into()));
    }
    let n = curves.len() as u64;
    let pvals = grid
        .iter()
        .map(|&lam| {
            let count = empirical_risk(curves, lam)?
                .count()
                .ok_or_else(|| Error::Invalid("binomial p-values need 0-1 losses".into()))?;
            Ok(binom_cdf_unchecked(count, n, eps))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PValueGrid {
        lambdas: grid.to_vec(),
        pvals,
    })
}

/// `{λ_j : p_j < δ/N}`.
pub fn ltt_bonferroni(grid: &PValueGrid, delta: f64) -> Vec<f64> {
    let cut = delta / grid.lambdas.len() as f64;
    grid.lambdas
        .iter()
        .zip(&grid.pvals)
        .filter(|(_, &p)| p < cut)
        .map(|(&l, _)| l)
        .collect()
}

/// Fixed-sequence testing from the largest `λ` down: reject while
/// `p_j <= δ`, stop at the first `p_j > δ`. Ascending output.
pub fn ltt_fixed_sequence(grid: &PValueGrid, delta: f64) -> Vec<f64> {
    let keep = grid.pvals.iter().rev().take_while(|&&p| p <= delta).count();
    grid.lambdas[grid.lambdas.len() - keep..].to_vec()
}

/// Calibration scores plus the `±∞` sentinels, deduplicated.
pub fn score_grid(scores: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = scores.iter().copied().filter(|s| s.is_finite()).collect();
    g.push(f64::NEG_INFINITY);
    g.push(f64::INFINITY);
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{p_hat, q_hat, NonconformityScores};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zero_one(scores: &[f64]) -> Vec<LossCurve> {
        scores.iter().map(|&s| LossCurve::zero_one(s)).collect()
    }

    fn random_scores(rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = rng.random_range(1..=200);
        // coarse values force ties
        let levels = rng.random_range(2..50) as f64;
        (0..n).map(|_| (rng.random::<f64>() * levels).floor()).collect()
    }

    #[test]
    fn empirical_risk_examples() {
        let zeros: Vec<_> = (0..5).map(|_| LossCurve::step(0.0, vec![], Some(1.0)).unwrap()).collect();
        assert_eq!(empirical_risk(&zeros, 3.0).unwrap().r_hat, 0.0);
        let s: Vec<f64> = (1..=10).map(f64::from).collect();
        let r = empirical_risk(&zero_one(&s), 7.0).unwrap();
        assert!((r.r_hat - 0.3).abs() < 1e-15);
        assert_eq!(r.count(), Some(3));
        assert!(empirical_risk(&[], 0.0).is_err());
    }

    #[test]
    fn crc_examples() {
        let c = vec![LossCurve::zero_one(2.0)];
        assert_eq!(crc_lambda(&c, 1.0, 0.5, LambdaDomain::default()).unwrap(), 2.0);
        assert_eq!(crc_lambda(&c, 1.0, 1.0, LambdaDomain::default()).unwrap(), f64::NEG_INFINITY);
        assert!(crc_lambda(&c, 1.0, 1.5, LambdaDomain::default()).is_err());
        let c = zero_one(&[1.0, 2.0, 3.0]);
        // needs the sentinel: 0 + 1 <= 0.1·4 never holds
        assert_eq!(crc_lambda(&c, 1.0, 0.1, LambdaDomain::default()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn crc_and_ucb_match_order_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let s = random_scores(&mut rng);
            let curves = zero_one(&s);
            let scores = NonconformityScores::new(s).unwrap();
            let alpha = rng.random_range(0.01..0.5);
            let (eps, delta) = (rng.random_range(0.01..0.3), rng.random_range(0.01..0.3));
            let dom = LambdaDomain::default();
            assert_eq!(
                crc_lambda(&curves, 1.0, alpha, dom).unwrap(),
                q_hat(&scores, alpha).unwrap().lambda_hat
            );
            assert_eq!(
                ucb_lambda(&curves, eps, delta, UcbMethod::ExactBinomial, dom).unwrap(),
                p_hat(&scores, eps, delta).unwrap().lambda_hat
            );
        }
    }

    #[test]
    fn crc_on_exact_rational_level() {
        let s: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let lam = crc_lambda(&zero_one(&s), 1.0, 88.0 / 1001.0, LambdaDomain::default()).unwrap();
        assert_eq!(lam, 912.0);
    }

    #[test]
    fn ucb_exact_examples() {
        let u = ucb_exact_binomial(0, 100, 0.1).unwrap();
        assert!((u - (1.0 - 0.1f64.powf(0.01))).abs() < 1e-10);
        assert!(ucb_exact_binomial(100, 100, 0.1).unwrap() > 1.0 - 1e-9);
        let mut prev = 0.0;
        for k in 0..=50 {
            let u = ucb_exact_binomial(k, 50, 0.05).unwrap();
            assert!(u >= prev);
            prev = u;
        }
    }

    #[test]
    fn hoeffding_examples() {
        assert_eq!(ucb_hoeffding(0.2, 10, 1.0, 1.0).unwrap(), 0.2);
        assert!(ucb_hoeffding(0.2, 10_000, 0.1, 1.0).unwrap() < ucb_hoeffding(0.2, 100, 0.1, 1.0).unwrap());
        assert!(ucb_hoeffding(0.0, 3, 0.5, 2.0).unwrap() >= 0.0);
    }

    #[test]
    fn hoeffding_is_more_conservative() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let s = random_scores(&mut rng);
            let c = zero_one(&s);
            let (eps, delta) = (rng.random_range(0.05..0.5), rng.random_range(0.01..0.3));
            let d = LambdaDomain::default();
            let exact = ucb_lambda(&c, eps, delta, UcbMethod::ExactBinomial, d).unwrap();
            let hoeff = ucb_lambda(&c, eps, delta, UcbMethod::Hoeffding { bound: 1.0 }, d).unwrap();
            assert!(hoeff >= exact);
        }
    }

    #[test]
    fn ucb_at_domain_bottom() {
        let c = zero_one(&[1.0, 2.0]);
        let d = LambdaDomain::new(5.0, 10.0).unwrap();
        assert_eq!(ucb_lambda(&c, 0.9, 0.5, UcbMethod::ExactBinomial, d).unwrap(), 5.0);
    }

    #[test]
    fn general_step_losses() {
        let c = LossCurve::from_grid(&[0.0, 1.0, 2.0], |l| 1.0 - l / 2.0, Some(1.0)).unwrap();
        assert_eq!(c.eval(-1.0), 1.0);
        assert_eq!(c.eval(1.5), 0.5);
        assert_eq!(c.eval(9.0), 0.0);
        assert!(LossCurve::from_grid(&[0.0, 1.0], |l| l, None).is_err());
        assert!(LossCurve::step(2.0, vec![], Some(1.0)).is_err());
        // Σℓ + B <= α(n+1) with two copies, B = 1, α = 2/3: need Σℓ <= 1
        let lam = crc_lambda(&[c.clone(), c], 1.0, 2.0 / 3.0, LambdaDomain::default()).unwrap();
        assert_eq!(lam, 1.0);
    }

    #[test]
    fn ltt_examples() {
        let s: Vec<f64> = (1..=20).map(f64::from).collect();
        let c = zero_one(&s);
        let g = ltt_pvalues(&[0.0, 10.0, 20.0, f64::INFINITY], &c, 0.2).unwrap();
        assert!((g.pvals[3] - 0.8f64.powi(20)).abs() < 1e-15);
        assert!(g.pvals.windows(2).all(|w| w[0] >= w[1]));

        let all = PValueGrid {
            lambdas: vec![1.0, 2.0, 3.0],
            pvals: vec![0.01, 0.02, 0.0],
        };
        assert_eq!(ltt_fixed_sequence(&all, 0.05), vec![1.0, 2.0, 3.0]);
        let none = PValueGrid {
            lambdas: vec![1.0, 2.0],
            pvals: vec![0.0, 0.5],
        };
        assert!(ltt_fixed_sequence(&none, 0.05).is_empty());
        assert!(ltt_bonferroni(&none, 0.05) == vec![1.0]);
        let single = PValueGrid {
            lambdas: vec![1.0],
            pvals: vec![0.04],
        };
        assert_eq!(ltt_bonferroni(&single, 0.05), vec![1.0]);
        assert!(ltt_pvalues(&[1.0, 1.0], &c, 0.1).is_err());
    }

    #[test]
    fn bonferroni_within_fixed_sequence_on_monotone_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let s: Vec<f64> = (0..100).map(|_| rng.random()).collect();
            let grid: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
            let g = ltt_pvalues(&grid, &zero_one(&s), 0.1).unwrap();
            let fs = ltt_fixed_sequence(&g, 0.1);
            assert!(ltt_bonferroni(&g, 0.1).iter().all(|l| fs.contains(l)));
        }
    }

    #[test]
    fn fixed_sequence_tracks_ucb() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..50 {
            let n = rng.random_range(20..200);
            let s: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let c = zero_one(&s);
            let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
            let (eps, delta) = (0.2, 0.1);
            let fs = ltt_fixed_sequence(&ltt_pvalues(&grid, &c, eps).unwrap(), delta);
            let ucb = ucb_lambda(&c, eps, delta, UcbMethod::ExactBinomial, LambdaDomain::default()).unwrap();
            if let Some(&m) = fs.first() {
                assert!(m >= ucb && m - ucb <= 1e-3 + 1e-12, "{m} {ucb}");
            } else {
                assert!(ucb > 1.0);
            }
        }
    }

    #[test]
    fn score_grid_has_sentinels() {
        assert_eq!(
            score_grid(&[2.0, 1.0, 2.0]),
            vec![f64::NEG_INFINITY, 1.0, 2.0, f64::INFINITY]
        );
    }
}
