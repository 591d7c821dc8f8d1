//! Saddle-point building blocks for binomial and beta densities.
//!
//! The binomial density is evaluated in Loader's form
//! `exp(stirlerr(n) - stirlerr(x) - stirlerr(n-x) - bd0(x, np) - bd0(n-x, nq)) / sqrt(2πx(1-x/n))`,
//! which keeps full relative precision for large `n` where the naive
//! `lgamma` difference cancels catastrophically.

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

// stirlerr(k/2) for k = 0..=30; entry 0 is unused.
#[allow(clippy::excessive_precision)]
const SFERR_HALVES: [f64; 31] = [
    0.0,
    0.153_426_409_720_027_345_291_383_9,
    0.081_061_466_795_327_258_219_670_26,
    0.054_814_121_051_917_653_896_138_7,
    0.041_340_695_955_409_294_093_822_08,
    0.033_162_873_519_936_287_485_110_51,
    0.027_677_925_684_998_339_148_789_29,
    0.023_746_163_656_297_495_971_330_28,
    0.020_790_672_103_765_093_111_522_77,
    0.018_488_450_532_673_185_230_779_36,
    0.016_644_691_189_821_192_163_194_87,
    0.015_134_973_221_917_378_873_513_84,
    0.013_876_128_823_070_747_998_745_73,
    0.012_810_465_242_920_226_924_250_66,
    0.011_896_709_945_891_770_095_055_72,
    0.011_104_559_758_206_917_326_630_76,
    0.010_411_265_261_972_096_497_478_57,
    0.009_799_416_126_158_803_298_390_373,
    0.009_255_462_182_712_732_917_728_637,
    0.008_768_700_134_139_385_462_955_047,
    0.008_330_563_433_362_871_256_469_319,
    0.007_934_114_564_314_020_547_249_562,
    0.007_573_675_487_951_840_794_972_024,
    0.007_244_554_301_320_383_179_546_197,
    0.006_942_840_107_209_529_865_664_153,
    0.006_665_247_032_707_682_442_356_181,
    0.006_408_994_188_004_207_068_439_631,
    0.006_171_712_263_039_457_647_534_605,
    0.005_951_370_112_758_847_735_624_416,
    0.005_746_216_513_010_115_682_026_102,
    0.005_554_733_551_962_801_371_038_69,
];

/// Error of Stirling's approximation: `ln Γ(n+1) - ((n+½)ln n - n + ln √(2π))`.
pub fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n <= 15.0 {
        let nn = n + n;
        if nn == nn.trunc() && nn >= 1.0 {
            return SFERR_HALVES[nn as usize];
        }
        return libm::lgamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np - x`, evaluated without cancellation when
/// `x` is close to `np`.
pub fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
    }
    x * (x / np).ln() + np - x
}

/// Natural log of the binomial density at (possibly non-integer) `x` with
/// `n` trials, success probability `p` and `q = 1 - p` passed separately so
/// callers can supply an accurate complement.
pub fn ln_dbinom_raw(x: f64, n: f64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if x == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    if x == 0.0 {
        if n == 0.0 {
            return 0.0;
        }
        return if p < 0.1 { -bd0(n, n * q) - n * p } else { n * q.ln() };
    }
    if x == n {
        return if q < 0.1 { -bd0(n, n * p) - n * q } else { n * p.ln() };
    }
    if x < 0.0 || x > n {
        return f64::NEG_INFINITY;
    }
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q);
    let lf = LN_2PI + x.ln() + (-x / n).ln_1p();
    lc - 0.5 * lf
}

/// Binomial density; see [`ln_dbinom_raw`].
pub fn dbinom_raw(x: f64, n: f64, p: f64, q: f64) -> f64 {
    ln_dbinom_raw(x, n, p, q).exp()
}

/// `x^a (1-x)^b / B(a, b)`, the beta density times `x(1-x)`.
pub fn beta_kernel(x: f64, a: f64, b: f64) -> f64 {
    let n = a + b;
    (a * b / n) * dbinom_raw(a, n, x, 1.0 - x)
}

/// ln B(a, b) through `lgamma`; only used where a few ulps of absolute
/// error in the log are harmless.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constants_agree_with_std() {
        assert!(((2.0 * PI).sqrt().ln() - LN_SQRT_2PI).abs() < 1e-15);
        assert!(((2.0 * PI).ln() - LN_2PI).abs() < 1e-15);
    }

    #[test]
    fn stirlerr_branches_are_continuous() {
        // lgamma-based formula vs the series on either side of the cutoffs
        for &n in &[15.0_f64, 35.0, 80.0, 500.0] {
            let below = stirlerr(n);
            let above = stirlerr(n + 1e-9);
            assert!((below - above).abs() < 1e-12, "n={n}");
        }
        let direct = libm::lgamma(4.25) - 3.75 * 3.25_f64.ln() + 3.25 - LN_SQRT_2PI;
        assert!((stirlerr(3.25) - direct).abs() < 1e-15);
    }

    #[test]
    fn dbinom_matches_closed_forms() {
        // C(10,3) 0.2^3 0.8^7
        let exact = 120.0 * 0.2_f64.powi(3) * 0.8_f64.powi(7);
        let v = dbinom_raw(3.0, 10.0, 0.2, 0.8);
        assert!(((v - exact) / exact).abs() < 1e-14);
        assert!((dbinom_raw(0.0, 100.0, 0.1, 0.9) - 0.9_f64.powi(100)).abs() < 1e-18);
    }

    #[test]
    fn beta_kernel_uniform() {
        // x^1 (1-x)^1 / B(1,1) = x(1-x)
        assert!((beta_kernel(0.3, 1.0, 1.0) - 0.21).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1.0, 1e-16, 1e-16, -1.0].into_iter().collect();
        assert!((s.value() - 2e-16).abs() < 1e-30);
    }
}
