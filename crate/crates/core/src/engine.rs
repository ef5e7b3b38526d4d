//! Row-partitioned parallel execution.
//!
//! The residual is split into contiguous blocks of timepoint rows, one owner
//! per block. Every iteration runs as barrier-separated phases on a worker
//! pool:
//!
//! 1. `u` is shared read-only; each block produces a partial `R_i^T u_i`
//!    and the partials are summed in ascending block order.
//! 2. The coordinator projects the sum onto the top-`r` support.
//! 3. The sparse `v` is shared read-only; each block computes its entries of
//!    `R v`, which the coordinator assembles in row order and normalizes.
//! 4. After an atom is accepted, each block deflates itself independently.
//!
//! Every block runs the same kernels as the serial path, so a single
//! partition is bit-identical to [`crate::serial::decompose`]. With more
//! partitions only the grouping of the partial sums differs.

use std::num::NonZeroUsize;

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::atom::{Atom, BasisVector, LoadingVector};
use crate::error::{Error, Result};
use crate::kernels;
use crate::matrix::DataMatrix;
use crate::serial::{self, AtomOps, Decomposition, DecompositionConfig, ResidualOps};
use crate::timing::RunTimer;

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV: &str = "R1DL_WORKERS";

/// A contiguous block of rows. The buffer starts as a copy of the input rows
/// and is deflated in place as atoms are accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct RowPartition {
    index: usize,
    first_row: usize,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RowPartition {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn first_row(&self) -> usize {
        self.first_row
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row_range(&self) -> std::ops::Range<usize> {
        self.first_row..self.first_row + self.rows
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn block_u<'a>(&self, u: &'a [f64]) -> &'a [f64] {
        &u[self.row_range()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedMatrix {
    rows: usize,
    cols: usize,
    partitions: Vec<RowPartition>,
}

/// Row counts of the blocks: the first `T mod W` blocks get one extra row.
pub fn block_sizes(rows: usize, partitions: usize) -> Result<Vec<usize>> {
    if partitions < 1 || partitions > rows {
        return Err(Error::InvalidPartitioning { partitions, rows });
    }
    let base = rows / partitions;
    let extra = rows % partitions;
    Ok((0..partitions).map(|i| base + usize::from(i < extra)).collect())
}

/// Splits `s` into `n_partitions` near-equal contiguous row blocks.
pub fn partition_matrix(s: &DataMatrix, n_partitions: usize) -> Result<PartitionedMatrix> {
    let sizes = block_sizes(s.rows(), n_partitions)?;
    let cols = s.cols();
    let mut partitions = Vec::with_capacity(sizes.len());
    let mut first_row = 0;
    for (index, rows) in sizes.into_iter().enumerate() {
        let data = s.as_slice()[first_row * cols..(first_row + rows) * cols].to_vec();
        partitions.push(RowPartition {
            index,
            first_row,
            rows,
            cols,
            data,
        });
        first_row += rows;
    }
    Ok(PartitionedMatrix {
        rows: s.rows(),
        cols,
        partitions,
    })
}

impl PartitionedMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn partition_count(&self) -> usize {
        self.partitions.len()
    }

    pub fn partitions(&self) -> &[RowPartition] {
        &self.partitions
    }

    /// Concatenates the blocks back into one matrix.
    pub fn assemble(&self) -> DataMatrix {
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for p in &self.partitions {
            data.extend_from_slice(&p.data);
        }
        DataMatrix::from_parts_unchecked(self.rows, self.cols, data)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    pub workers: usize,
    /// Defaults to the worker count, capped at `T`.
    pub partitions: Option<usize>,
}

impl EngineConfig {
    pub fn new(workers: usize) -> Self {
        Self {
            workers,
            partitions: None,
        }
    }

    pub fn with_partitions(mut self, partitions: usize) -> Self {
        self.partitions = Some(partitions);
        self
    }

    /// Worker count from `R1DL_WORKERS`, falling back to the available
    /// hardware parallelism.
    pub fn from_env() -> Result<Self> {
        Ok(Self::new(default_workers(std::env::var(WORKERS_ENV).ok().as_deref())?))
    }

    pub fn partitions_for(&self, rows: usize) -> usize {
        self.partitions.unwrap_or_else(|| self.workers.min(rows))
    }
}

/// Resolves the worker count from an optional environment value.
pub fn default_workers(env_value: Option<&str>) -> Result<usize> {
    match env_value {
        Some(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::InvalidConfig(format!(
                "{WORKERS_ENV}={raw:?} is not a positive integer"
            ))),
        },
        None => Ok(std::thread::available_parallelism().map_or(1, NonZeroUsize::get)),
    }
}

/// A worker pool running the partitioned primitives.
pub struct Engine {
    pool: ThreadPool,
    config: EngineConfig,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        if config.workers < 1 {
            return Err(Error::InvalidConfig("worker count must be at least 1".into()));
        }
        if config.partitions == Some(0) {
            return Err(Error::InvalidConfig("partition count must be at least 1".into()));
        }
        let pool = ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .thread_name(|i| format!("r1dl-worker-{i}"))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool, config })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn workers(&self) -> usize {
        self.config.workers
    }

    /// `S^T u` as a sum of per-block partials, reduced in block order.
    pub fn vt_product(&self, m: &PartitionedMatrix, u: &BasisVector) -> Vec<f64> {
        assert_eq!(u.len(), m.rows, "u length must equal T");
        let cols = m.cols;
        let partials: Vec<Vec<f64>> = self.pool.install(|| {
            m.partitions
                .par_iter()
                .map(|p| {
                    let mut partial = vec![0.0; cols];
                    kernels::accumulate_weighted_rows(&p.data, cols, p.block_u(u.as_slice()), &mut partial);
                    partial
                })
                .collect()
        });
        let mut partials = partials.into_iter();
        let mut total = partials.next().expect("at least one partition");
        for partial in partials {
            kernels::add_assign(&mut total, &partial);
        }
        total
    }

    /// `S v` before normalization, assembled in row order.
    pub fn mv_product_raw(&self, m: &PartitionedMatrix, v: &LoadingVector) -> Vec<f64> {
        assert_eq!(v.len(), m.cols, "v length must equal P");
        let cols = m.cols;
        let blocks: Vec<Vec<f64>> = self.pool.install(|| {
            m.partitions
                .par_iter()
                .map(|p| {
                    p.data
                        .chunks_exact(cols)
                        .map(|row| kernels::sparse_row_dot(row, v))
                        .collect()
                })
                .collect()
        });
        blocks.concat()
    }

    /// Normalized `S v` with the sign convention; equals
    /// [`serial::update_u`].
    pub fn mv_product(&self, m: &PartitionedMatrix, v: &LoadingVector) -> Result<BasisVector> {
        BasisVector::normalized(self.mv_product_raw(m, v)).map(|(u, _, _)| u)
    }

    /// `S_i -= u_i v^T` on every block, over the support of `v`.
    pub fn deflate(&self, m: &mut PartitionedMatrix, atom: &Atom) {
        assert_eq!(atom.u.len(), m.rows, "u length must equal T");
        assert_eq!(atom.v.len(), m.cols, "v length must equal P");
        let cols = m.cols;
        let u = atom.u.as_slice();
        let v = &atom.v;
        self.pool.install(|| {
            m.partitions.par_iter_mut().for_each(|p| {
                let range = p.row_range();
                for (row, &ut) in p.data.chunks_exact_mut(cols).zip(&u[range]) {
                    kernels::deflate_row(row, ut, v);
                }
            });
        });
    }

    fn ordered_sum(&self, m: &PartitionedMatrix, f: impl Fn(&RowPartition) -> f64 + Sync + Send) -> f64 {
        let partials: Vec<f64> = self.pool.install(|| m.partitions.par_iter().map(f).collect());
        let mut it = partials.into_iter();
        let first = it.next().expect("at least one partition");
        it.fold(first, |acc, x| acc + x)
    }

    pub fn frobenius_sq(&self, m: &PartitionedMatrix) -> f64 {
        self.ordered_sum(m, |p| kernels::sum_squares(&p.data))
    }

    pub fn energy(&self, m: &PartitionedMatrix, atom: &Atom) -> f64 {
        self.energy_sq(m, &atom.u, &atom.v).sqrt()
    }

    fn energy_sq(&self, m: &PartitionedMatrix, u: &BasisVector, v: &LoadingVector) -> f64 {
        let cols = m.cols;
        self.ordered_sum(m, |p| serial::block_energy(&p.data, cols, p.block_u(u.as_slice()), v))
    }

    /// Runs the full decomposition on `m`, leaving the final residual in it.
    pub fn decompose(&self, m: &mut PartitionedMatrix, config: &DecompositionConfig) -> Result<Decomposition> {
        self.decompose_timed(m, config, &mut RunTimer::new())
    }

    pub fn decompose_timed(
        &self,
        m: &mut PartitionedMatrix,
        config: &DecompositionConfig,
        timer: &mut RunTimer<'_>,
    ) -> Result<Decomposition> {
        let mut ops = Partitioned { engine: self, m };
        serial::decompose_loop(&mut ops, config, timer)
    }

    /// Partitions `s` per the engine config and decomposes the copy.
    pub fn decompose_matrix(&self, s: &DataMatrix, config: &DecompositionConfig) -> Result<Decomposition> {
        self.decompose_matrix_timed(s, config, &mut RunTimer::new())
    }

    pub fn decompose_matrix_timed(
        &self,
        s: &DataMatrix,
        config: &DecompositionConfig,
        timer: &mut RunTimer<'_>,
    ) -> Result<Decomposition> {
        config.validate()?;
        let mut m = partition_matrix(s, self.config.partitions_for(s.rows()))?;
        self.decompose_timed(&mut m, config, timer)
    }
}

/// Convenience wrapper: build an engine and decompose `m` in place.
pub fn decompose_parallel(
    m: &mut PartitionedMatrix,
    config: &DecompositionConfig,
    engine: &EngineConfig,
) -> Result<Decomposition> {
    Engine::new(engine.clone())?.decompose(m, config)
}

struct Partitioned<'a> {
    engine: &'a Engine,
    m: &'a mut PartitionedMatrix,
}

impl AtomOps for Partitioned<'_> {
    fn rows(&self) -> usize {
        self.m.rows
    }

    fn cols(&self) -> usize {
        self.m.cols
    }

    fn vt_product(&self, u: &BasisVector) -> Vec<f64> {
        self.engine.vt_product(self.m, u)
    }

    fn mv_product(&self, v: &LoadingVector) -> Vec<f64> {
        self.engine.mv_product_raw(self.m, v)
    }

    fn energy_sq(&self, u: &BasisVector, v: &LoadingVector) -> f64 {
        self.engine.energy_sq(self.m, u, v)
    }
}

impl ResidualOps for Partitioned<'_> {
    fn deflate(&mut self, atom: &Atom) {
        self.engine.deflate(self.m, atom);
    }

    fn frobenius_sq(&self) -> f64 {
        self.engine.frobenius_sq(self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rows: usize, cols: usize) -> DataMatrix {
        DataMatrix::from_fn(rows, cols, |t, p| ((t * 31 + p * 17) % 13) as f64 - 6.0).unwrap()
    }

    #[test]
    fn block_sizes_follow_rule() {
        assert_eq!(block_sizes(4, 1).unwrap(), vec![4]);
        assert_eq!(block_sizes(5, 2).unwrap(), vec![3, 2]);
        assert_eq!(block_sizes(176, 8).unwrap(), vec![22; 8]);
        assert!(block_sizes(3, 4).is_err());
        assert!(block_sizes(3, 0).is_err());
    }

    #[test]
    fn partitions_tile_rows() {
        let s = sample(5, 3);
        let m = partition_matrix(&s, 2).unwrap();
        let firsts: Vec<usize> = m.partitions().iter().map(|p| p.first_row()).collect();
        assert_eq!(firsts, vec![0, 3]);
        assert_eq!(m.assemble(), s);
        let one = partition_matrix(&sample(4, 3), 1).unwrap();
        assert_eq!(one.partitions()[0].as_slice(), sample(4, 3).as_slice());
    }

    #[test]
    fn basis_u_picks_row() {
        let s = sample(6, 9);
        let m = partition_matrix(&s, 3).unwrap();
        let engine = Engine::new(EngineConfig::new(2)).unwrap();
        let mut e = vec![0.0; 6];
        e[4] = 1.0;
        let out = engine.vt_product(&m, &BasisVector::from_raw(e));
        assert_eq!(out, s.row(4));
    }

    #[test]
    fn unit_loading_picks_column() {
        let s = sample(7, 5);
        let m = partition_matrix(&s, 3).unwrap();
        let engine = Engine::new(EngineConfig::new(3)).unwrap();
        let v = LoadingVector::new(5, vec![2], vec![1.0]).unwrap();
        assert_eq!(engine.mv_product_raw(&m, &v), s.column(2));
    }

    #[test]
    fn empty_loading_deflation_is_noop() {
        let s = sample(6, 4);
        let mut m = partition_matrix(&s, 3).unwrap();
        let engine = Engine::new(EngineConfig::new(2)).unwrap();
        let atom = Atom {
            u: BasisVector::normalized(vec![1.0; 6]).unwrap().0,
            v: LoadingVector::empty(4),
        };
        engine.deflate(&mut m, &atom);
        assert_eq!(m.assemble(), s);
    }

    #[test]
    fn zero_image_errors() {
        let s = DataMatrix::zeros(4, 4).unwrap();
        let m = partition_matrix(&s, 2).unwrap();
        let engine = Engine::new(EngineConfig::new(2)).unwrap();
        let v = LoadingVector::new(4, vec![0], vec![1.0]).unwrap();
        assert!(matches!(engine.mv_product(&m, &v), Err(Error::ZeroImage)));
    }

    #[test]
    fn worker_env_parsing() {
        assert_eq!(default_workers(Some("3")).unwrap(), 3);
        assert!(default_workers(Some("0")).is_err());
        assert!(default_workers(Some("many")).is_err());
        assert!(default_workers(None).unwrap() >= 1);
    }

    #[test]
    fn partitions_default_to_workers_capped_at_rows() {
        assert_eq!(EngineConfig::new(8).partitions_for(5), 5);
        assert_eq!(EngineConfig::new(2).partitions_for(5), 2);
        assert_eq!(EngineConfig::new(2).with_partitions(4).partitions_for(5), 4);
    }

    #[test]
    fn too_many_partitions_rejected() {
        let engine = Engine::new(EngineConfig::new(1).with_partitions(9)).unwrap();
        let cfg = DecompositionConfig::new(1, crate::atom::SparsityParam::Count(1));
        let err = engine.decompose_matrix(&sample(4, 4), &cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidPartitioning { partitions: 9, rows: 4 }));
    }
}
