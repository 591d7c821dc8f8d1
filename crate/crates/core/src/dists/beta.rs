use super::special::beta_kernel;
use super::BetaParams;
use crate::error::{check_unit_closed, check_unit_open, Result};

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 100_000;

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// Evaluated with the modified-Lentz continued fraction on whichever side of
/// the mean `(a+1)/(a+b+2)` converges fast, using the reflection
/// `I_x(a,b) = 1 - I_{1-x}(b,a)` on the other side.
pub fn beta_reg(x: f64, params: BetaParams) -> Result<f64> {
    check_unit_closed("x", x)?;
    Ok(beta_reg_unchecked(x, params.a, params.b))
}

pub(crate) fn beta_reg_unchecked(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x < (a + 1.0) / (a + b + 2.0) {
        beta_kernel(x, a, b) * continued_fraction(x, a, b) / a
    } else {
        1.0 - beta_kernel(1.0 - x, b, a) * continued_fraction(1.0 - x, b, a) / b
    }
}

fn continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let clamp = |v: f64| if v.abs() < CF_TINY { CF_TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// `x` with `I_x(a, b) = q`, by bisection to `|I_x - q| <= 1e-10`.
pub fn beta_quantile(q: f64, params: BetaParams) -> Result<f64> {
    check_unit_open("q", q)?;
    let (a, b) = (params.a, params.b);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut mid = 0.5;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let v = beta_reg_unchecked(mid, a, b);
        if (v - q).abs() <= 1e-10 && hi - lo < 1e-12 {
            break;
        }
        if v < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid {
            break;
        }
    }
    Ok(mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::binomial::binom_cdf;

    fn bp(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    #[test]
    fn uniform_and_endpoints() {
        assert!((beta_reg(0.5, bp(1.0, 1.0)).unwrap() - 0.5).abs() < 1e-15);
        assert!((beta_reg(0.3, bp(1.0, 1.0)).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(beta_reg(1.0, bp(3.0, 7.5)).unwrap(), 1.0);
        assert_eq!(beta_reg(0.0, bp(3.0, 7.5)).unwrap(), 0.0);
        assert!(beta_reg(1.2, bp(1.0, 1.0)).is_err());
    }

    #[test]
    fn closed_forms() {
        // I_x(a, 1) = x^a ; I_x(1, b) = 1 - (1-x)^b
        for &x in &[0.01, 0.2, 0.5, 0.77, 0.99] {
            let v = beta_reg(x, bp(4.5, 1.0)).unwrap();
            assert!((v - x.powf(4.5)).abs() < 1e-14 * x.powf(4.5).max(1e-3));
            let v = beta_reg(x, bp(1.0, 2.5)).unwrap();
            assert!((v - (1.0 - (1.0 - x).powf(2.5))).abs() < 1e-14);
        }
    }

    #[test]
    fn binomial_identity_example() {
        // Beta(1-p; m+1-k, k) = Bin(k-1; m, p) at k=3, m=10, p=0.2
        let direct: f64 = (0..=2)
            .map(|i: i32| {
                let c = [1.0, 10.0, 45.0][i as usize];
                c * 0.2_f64.powi(i) * 0.8_f64.powi(10 - i)
            })
            .sum();
        let v = beta_reg(0.8, bp(8.0, 3.0)).unwrap();
        assert!((v - direct).abs() < 1e-14, "{v} vs {direct}");
        assert!((v - binom_cdf(2, 10, 0.2).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn large_parameters_match_binomial_route() {
        // Beta(0.9; 913, 88) = Bin(87; 1000, 0.1)
        let v = beta_reg(0.9, bp(913.0, 88.0)).unwrap();
        let w = binom_cdf(87, 1000, 0.1).unwrap();
        assert!(((v - w) / w).abs() < 1e-12, "{v} vs {w}");
    }

    #[test]
    fn quantile_examples() {
        assert!((beta_quantile(0.5, bp(1.0, 1.0)).unwrap() - 0.5).abs() < 1e-10);
        let x = beta_quantile(0.1, bp(913.0, 88.0)).unwrap();
        assert!((beta_reg(x, bp(913.0, 88.0)).unwrap() - 0.1).abs() <= 1e-10);
        assert!(beta_quantile(0.0, bp(1.0, 1.0)).is_err());
    }
}
