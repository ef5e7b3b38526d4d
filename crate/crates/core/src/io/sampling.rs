//! Uniform column sampling without replacement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingSpec {
    /// Fraction of columns to keep, in `(0, 1]`.
    pub rate: f64,
    pub seed: u64,
}

impl SamplingSpec {
    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "sampling rate {rate} is outside (0, 1]"
            )));
        }
        Ok(Self { rate, seed })
    }

    /// `max(1, round(rate * P))`.
    pub fn sampled_count(&self, cols: usize) -> usize {
        ((self.rate * cols as f64).round() as usize).clamp(1, cols.max(1))
    }
}

/// Moves a uniform random `m`-subset of `items` to the front (partial
/// Fisher-Yates).
pub fn partial_shuffle<T, R: Rng + ?Sized>(items: &mut [T], m: usize, rng: &mut R) {
    let n = items.len();
    for i in 0..m.min(n) {
        let j = rng.random_range(i..n);
        items.swap(i, j);
    }
}

/// Keeps a seeded uniform subset of columns, in ascending original order.
/// Returns the sampled matrix and the original index of each kept column.
pub fn sample_columns(s: &DataMatrix, spec: &SamplingSpec) -> Result<(DataMatrix, Vec<usize>)> {
    let spec = SamplingSpec::new(spec.rate, spec.seed)?;
    let m = spec.sampled_count(s.cols());
    let mut indices: Vec<usize> = (0..s.cols()).collect();
    if m < s.cols() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        partial_shuffle(&mut indices, m, &mut rng);
        indices.truncate(m);
        indices.sort_unstable();
    }
    let sampled = s.select_columns(&indices)?;
    Ok((sampled, indices))
}
