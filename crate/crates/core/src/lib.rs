//! Rank-1 dictionary learning for tall-transposed dense matrices.
//!
//! A `T x P` matrix (few timepoints, very many voxels) is decomposed into
//! `K` rank-1 atoms `u v^T`, where `u` is a unit-norm temporal pattern and
//! `v` is an l0-sparse spatial loading. Atoms are learned greedily: each one
//! is fit by alternating updates on the current residual, which is then
//! deflated before the next atom.
//!
//! Two execution paths share the same kernels:
//!
//! * [`serial`] is the reference implementation.
//! * [`engine`] partitions the matrix into row blocks and runs the same
//!   iteration on a worker pool with ordered reductions, so results are
//!   reproducible for a fixed partition count.
//!
//! [`io`] reads and writes matrices, factor files and run reports,
//! [`metrics`] holds the overlap, correlation and matching utilities, and
//! [`bench`] is the timing harness driven by the `r1dl` command line tool.

pub mod atom;
pub mod bench;
pub mod cli;
pub mod engine;
pub mod error;
pub mod io;
mod kernels;
pub mod matrix;
pub mod metrics;
pub mod serial;
pub mod synthetic;
pub mod timing;

pub use atom::{Atom, BasisVector, LoadingVector, SparsityParam};
pub use engine::{decompose_parallel, partition_matrix, Engine, EngineConfig, PartitionedMatrix, RowPartition};
pub use error::{Error, Result};
pub use matrix::DataMatrix;
pub use serial::{decompose, AtomStats, Decomposition, DecompositionConfig, EarlyStop};
