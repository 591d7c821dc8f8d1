//! One-dimensional heteroskedastic benchmark with rare large outliers:
//! `X ~ U[1, 5]`, `Y = Pois(sin²X + 0.1) + 0.03·X·γ₁ + 25·1{U < 0.01}·γ₂`.

use super::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

/// Switches for the two non-Poisson terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticTerms {
    pub noise: bool,
    pub outliers: bool,
}

impl Default for SyntheticTerms {
    fn default() -> Self {
        Self {
            noise: true,
            outliers: true,
        }
    }
}

pub fn gen_synthetic(count: usize, seed: u64) -> Dataset {
    gen_synthetic_with(count, seed, SyntheticTerms::default())
}

/// Each source of randomness reads its own ChaCha stream, so toggling a
/// term leaves the other draws unchanged.
pub fn gen_synthetic_with(count: usize, seed: u64, terms: SyntheticTerms) -> Dataset {
    let stream = |s: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s);
        rng
    };
    let (mut rx, mut rp, mut rg1, mut rg2, mut ru) = (stream(0), stream(1), stream(2), stream(3), stream(4));

    let mut rows = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let x: f64 = rx.random_range(1.0..5.0);
        let rate = x.sin().powi(2) + 0.1;
        let mut y: f64 = Poisson::new(rate).expect("rate is positive").sample(&mut rp);
        let g1: f64 = StandardNormal.sample(&mut rg1);
        let g2: f64 = StandardNormal.sample(&mut rg2);
        let u: f64 = ru.random();
        if terms.noise {
            y += 0.03 * x * g1;
        }
        if terms.outliers && u < 0.01 {
            y += 25.0 * g2;
        }
        rows.push(vec![x]);
        labels.push(y);
    }
    Dataset::new(rows, labels).expect("one feature per row")
}
