//! Seeded synthetic data: planted sparse rank-1 factors plus Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::atom::LoadingVector;
use crate::error::{Error, Result};
use crate::io::sampling::partial_shuffle;
use crate::matrix::DataMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub rows: usize,
    pub cols: usize,
    /// Strength `sigma_k` of each factor. Factor count is the length.
    pub strengths: Vec<f64>,
    /// Nonzeros per factor loading. Supports are pairwise disjoint.
    pub support: usize,
    /// Standard deviation of additive i.i.d. Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

/// One planted component `sigma * u v^T` with unit `u` and unit `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedFactor {
    pub strength: f64,
    pub u: Vec<f64>,
    pub v: LoadingVector,
}

#[derive(Debug, Clone)]
pub struct Planted {
    pub matrix: DataMatrix,
    pub factors: Vec<PlantedFactor>,
}

/// Builds `sum_k sigma_k u_k v_k^T + noise` with orthonormal `u_k` and
/// disjoint supports.
pub fn planted(spec: &PlantedSpec) -> Result<Planted> {
    let k = spec.strengths.len();
    if k > spec.rows {
        return Err(Error::InvalidConfig(format!(
            "{k} orthonormal factors need at least {k} rows"
        )));
    }
    if k.saturating_mul(spec.support) > spec.cols || spec.support == 0 && k > 0 {
        return Err(Error::InvalidConfig(format!(
            "{k} disjoint supports of size {} do not fit in {} columns",
            spec.support, spec.cols
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let basis = orthonormal_columns(spec.rows, k, &mut rng);

    let mut columns: Vec<usize> = (0..spec.cols).collect();
    partial_shuffle(&mut columns, k * spec.support, &mut rng);

    let mut factors = Vec::with_capacity(k);
    for (i, (&strength, u)) in spec.strengths.iter().zip(basis).enumerate() {
        let mut support = columns[i * spec.support..(i + 1) * spec.support].to_vec();
        support.sort_unstable();
        let mut values: Vec<f64> = support
            .iter()
            .map(|_| {
                let magnitude = rng.random_range(0.5..1.5);
                if rng.random_bool(0.5) {
                    magnitude
                } else {
                    -magnitude
                }
            })
            .collect();
        let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut values {
            *x /= norm;
        }
        factors.push(PlantedFactor {
            strength,
            u,
            v: LoadingVector::new(spec.cols, support, values)?,
        });
    }

    let mut data: Vec<f64> = if spec.noise > 0.0 {
        (0..spec.rows * spec.cols)
            .map(|_| spec.noise * rng.sample::<f64, _>(StandardNormal))
            .collect()
    } else {
        vec![0.0; spec.rows * spec.cols]
    };
    for f in &factors {
        for t in 0..spec.rows {
            let scale = f.strength * f.u[t];
            let row = &mut data[t * spec.cols..(t + 1) * spec.cols];
            for (p, x) in f.v.iter() {
                row[p] += scale * x;
            }
        }
    }
    Ok(Planted {
        matrix: DataMatrix::new(spec.rows, spec.cols, data)?,
        factors,
    })
}

/// I.i.d. standard-normal matrix.
pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Result<DataMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DataMatrix::new(rows, cols, data)
}

/// `count` orthonormal vectors of length `len` by modified Gram-Schmidt on
/// Gaussian draws.
pub fn orthonormal_columns<R: Rng + ?Sized>(len: usize, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}
