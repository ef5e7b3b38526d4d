//! Serial rank-1 dictionary learning.
//!
//! Each atom is fit by alternating an l0-constrained update of the loading
//! vector `v` with a closed-form update of the unit basis vector `u`, until
//! `u` stops moving. The residual is then deflated by `u v^T` and the next
//! atom is learned from it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::atom::{Atom, BasisVector, LoadingVector, SparsityParam};
use crate::error::{Error, Result};
use crate::kernels;
use crate::matrix::DataMatrix;
use crate::timing::{Phase, RunTimer};

/// Relative residual norm below which the remaining matrix counts as zero.
pub const ZERO_RESIDUAL_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionConfig {
    /// Number of atoms `K` to learn.
    pub atoms: usize,
    pub sparsity: SparsityParam,
    /// Convergence threshold on `||u_new - u_old||_2`.
    pub tol: f64,
    /// Iteration cap per atom.
    pub max_iter: usize,
    pub seed: u64,
    /// Record `||S - u v^T||_F` after every iteration (costs one pass over
    /// the residual per iteration).
    pub trace_energy: bool,
}

impl DecompositionConfig {
    pub fn new(atoms: usize, sparsity: SparsityParam) -> Self {
        Self {
            atoms,
            sparsity,
            tol: 1e-4,
            max_iter: 100,
            seed: 0,
            trace_energy: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_energy_trace(mut self, on: bool) -> Self {
        self.trace_energy = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms < 1 {
            return Err(Error::InvalidConfig("atom count K must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol {} must be positive", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        self.sparsity.validate()
    }

    /// Validates the config and resolves `r` for `cols` columns.
    pub fn resolve_sparsity(&self, cols: usize) -> Result<usize> {
        self.validate()?;
        let r = self.sparsity.resolve(cols)?;
        if r < 1 {
            return Err(Error::InvalidConfig("resolved sparsity is zero".into()));
        }
        Ok(r)
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomStats {
    /// Number of (v, u) update pairs executed.
    pub iterations: usize,
    pub converged: bool,
    /// `||R||_F` after deflating this atom.
    pub residual_norm: f64,
    /// Energy after each iteration; empty unless tracing was requested.
    pub energy_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EarlyStop {
    /// The residual vanished before `K` atoms were learned.
    ZeroResidual,
    /// An atom had a zero image `S v`.
    DegenerateAtom,
}

impl EarlyStop {
    pub fn name(self) -> &'static str {
        match self {
            EarlyStop::ZeroResidual => "zero_residual",
            EarlyStop::DegenerateAtom => "degenerate_atom",
        }
    }
}

/// Ordered atoms `(u_n, v_n)`: rows of `D` and rows of `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub rows: usize,
    pub cols: usize,
    pub atoms: Vec<Atom>,
    /// One entry per atom for computed decompositions; empty when loaded
    /// from factor files.
    pub stats: Vec<AtomStats>,
    pub early_stop: Option<EarlyStop>,
    pub config: Option<DecompositionConfig>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `D` as `K` rows of length `T`.
    pub fn temporal_patterns(&self) -> Vec<Vec<f64>> {
        self.atoms.iter().map(|a| a.u.as_slice().to_vec()).collect()
    }
}

/// Matrix-level primitives the alternating loop is built from. Implemented by
/// the dense serial matrix and the partitioned engine.
pub(crate) trait AtomOps {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `R^T u`, dense length `P`.
    fn vt_product(&self, u: &BasisVector) -> Vec<f64>;
    /// `R v`, dense length `T`, not normalized.
    fn mv_product(&self, v: &LoadingVector) -> Vec<f64>;
    /// Squared `||R - u v^T||_F`.
    fn energy_sq(&self, u: &BasisVector, v: &LoadingVector) -> f64;
}

/// [`AtomOps`] plus in-place deflation of an owned residual.
pub(crate) trait ResidualOps: AtomOps {
    fn deflate(&mut self, atom: &Atom);
    fn frobenius_sq(&self) -> f64;
}

impl AtomOps for DataMatrix {
    fn rows(&self) -> usize {
        DataMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        DataMatrix::cols(self)
    }

    fn vt_product(&self, u: &BasisVector) -> Vec<f64> {
        vt_product(self, u)
    }

    fn mv_product(&self, v: &LoadingVector) -> Vec<f64> {
        mv_product(self, v)
    }

    fn energy_sq(&self, u: &BasisVector, v: &LoadingVector) -> f64 {
        block_energy(self.as_slice(), self.cols(), u.as_slice(), v)
    }
}

impl ResidualOps for DataMatrix {
    fn deflate(&mut self, atom: &Atom) {
        deflate_in_place(self, atom);
    }

    fn frobenius_sq(&self) -> f64 {
        DataMatrix::frobenius_sq(self)
    }
}

fn vt_product(s: &DataMatrix, u: &BasisVector) -> Vec<f64> {
    assert_eq!(u.len(), s.rows(), "u length must equal T");
    let mut out = vec![0.0; s.cols()];
    kernels::accumulate_weighted_rows(s.as_slice(), s.cols(), u.as_slice(), &mut out);
    out
}

fn mv_product(s: &DataMatrix, v: &LoadingVector) -> Vec<f64> {
    assert_eq!(v.len(), s.cols(), "v length must equal P");
    s.row_iter().map(|row| kernels::sparse_row_dot(row, v)).collect()
}

/// Draws a random unit basis vector of length `len` (standard-normal
/// entries, normalized, sign convention applied).
pub fn init_u<R: Rng + ?Sized>(len: usize, rng: &mut R) -> BasisVector {
    assert!(len >= 1, "basis vector length must be at least 1");
    loop {
        let raw: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok((u, _, _)) = BasisVector::normalized(raw) {
            return u;
        }
    }
}

/// Hard thresholding: keeps the `r` largest-magnitude entries (lower index
/// wins ties) and drops everything else. Exact zeros are never stored.
pub fn project_l0(dense: &[f64], r: usize) -> LoadingVector {
    let mut support: Vec<usize> = (0..dense.len()).filter(|&p| dense[p] != 0.0).collect();
    if support.len() > r {
        let by_magnitude = |a: &usize, b: &usize| {
            dense[*b]
                .abs()
                .total_cmp(&dense[*a].abs())
                .then_with(|| a.cmp(b))
        };
        if r == 0 {
            support.clear();
        } else {
            support.select_nth_unstable_by(r - 1, by_magnitude);
            support.truncate(r);
            support.shrink_to_fit();
        }
        support.sort_unstable();
    }
    let values = support.iter().map(|&p| dense[p]).collect();
    LoadingVector::from_parts_unchecked(dense.len(), support, values)
}

/// `argmin_v ||S - u v^T||_F` subject to `||v||_0 <= r`, for unit `u`.
pub fn update_v(s: &DataMatrix, u: &BasisVector, r: usize) -> LoadingVector {
    project_l0(&vt_product(s, u), r)
}

/// `S v / ||S v||` with the sign convention applied.
pub fn update_u(s: &DataMatrix, v: &LoadingVector) -> Result<BasisVector> {
    BasisVector::normalized(mv_product(s, v)).map(|(u, _, _)| u)
}

/// `||S - u v^T||_F`, accumulated row by row.
pub fn energy(s: &DataMatrix, atom: &Atom) -> f64 {
    check_atom_shape(s.rows(), s.cols(), atom);
    block_energy(s.as_slice(), s.cols(), atom.u.as_slice(), &atom.v).sqrt()
}

/// Squared residual energy of a row block against the matching slice of `u`.
pub(crate) fn block_energy(block: &[f64], cols: usize, u: &[f64], v: &LoadingVector) -> f64 {
    let mut acc = 0.0;
    for (row, &ut) in block.chunks_exact(cols).zip(u) {
        let mut next = v.iter().peekable();
        for (p, &x) in row.iter().enumerate() {
            let d = match next.peek() {
                Some(&(q, vq)) if q == p => {
                    next.next();
                    x - ut * vq
                }
                _ => x,
            };
            acc += d * d;
        }
    }
    acc
}

/// `R = S - u v^T`, touching only the support columns of `v`.
pub fn deflate(s: &DataMatrix, atom: &Atom) -> DataMatrix {
    let mut out = s.clone();
    deflate_in_place(&mut out, atom);
    out
}

pub fn deflate_in_place(s: &mut DataMatrix, atom: &Atom) {
    check_atom_shape(s.rows(), s.cols(), atom);
    let cols = s.cols();
    for (row, &ut) in s.as_mut_slice().chunks_exact_mut(cols).zip(atom.u.as_slice()) {
        kernels::deflate_row(row, ut, &atom.v);
    }
}

fn check_atom_shape(rows: usize, cols: usize, atom: &Atom) {
    assert_eq!(atom.u.len(), rows, "u length must equal T");
    assert_eq!(atom.v.len(), cols, "v length must equal P");
}

/// Fits one atom to `s` by alternating updates.
pub fn fit_atom<R: Rng + ?Sized>(
    s: &DataMatrix,
    config: &DecompositionConfig,
    rng: &mut R,
) -> Result<(Atom, AtomStats)> {
    let r = config.resolve_sparsity(s.cols())?;
    let (atom, mut stats) = fit_loop(s, r, config, rng, &mut RunTimer::new())
        .map_err(|e| match e {
            Error::ZeroImage => Error::DegenerateAtom { atom: 0 },
            other => other,
        })?;
    stats.residual_norm = energy(s, &atom);
    Ok((atom, stats))
}

/// The alternating loop shared by the serial and parallel paths. Returns
/// `Error::ZeroImage` for a degenerate atom.
pub(crate) fn fit_loop<O: AtomOps + ?Sized, R: Rng + ?Sized>(
    ops: &O,
    r: usize,
    config: &DecompositionConfig,
    rng: &mut R,
    timer: &mut RunTimer<'_>,
) -> Result<(Atom, AtomStats)> {
    let mut u = init_u(ops.rows(), rng);
    let mut v = LoadingVector::empty(ops.cols());
    let mut stats = AtomStats {
        iterations: 0,
        converged: false,
        residual_norm: f64::NAN,
        energy_trace: Vec::new(),
    };
    timer.lap(Phase::Setup);
    while stats.iterations < config.max_iter {
        v = project_l0(&ops.vt_product(&u), r);
        timer.lap(Phase::VUpdate);
        let (u_new, _, flipped) = BasisVector::normalized(ops.mv_product(&v))?;
        if flipped {
            v.negate();
        }
        let delta = u_new.distance(&u);
        u = u_new;
        stats.iterations += 1;
        timer.lap(Phase::UUpdate);
        if config.trace_energy {
            stats.energy_trace.push(ops.energy_sq(&u, &v).sqrt());
            timer.lap(Phase::Setup);
        }
        if delta < config.tol {
            stats.converged = true;
            break;
        }
    }
    Ok((Atom { u, v }, stats))
}

/// Greedy `K`-atom decomposition on successive residuals.
pub fn decompose(s: &DataMatrix, config: &DecompositionConfig) -> Result<Decomposition> {
    decompose_timed(s, config, &mut RunTimer::new())
}

pub fn decompose_timed(
    s: &DataMatrix,
    config: &DecompositionConfig,
    timer: &mut RunTimer<'_>,
) -> Result<Decomposition> {
    config.resolve_sparsity(s.cols())?;
    let mut residual = s.clone();
    decompose_loop(&mut residual, config, timer)
}

/// Deflation loop shared by both execution paths. Leaves the final residual
/// in `ops`.
pub(crate) fn decompose_loop<O: ResidualOps + ?Sized>(
    ops: &mut O,
    config: &DecompositionConfig,
    timer: &mut RunTimer<'_>,
) -> Result<Decomposition> {
    let r = config.resolve_sparsity(ops.cols())?;
    let mut rng = config.rng();
    let mut out = Decomposition {
        rows: ops.rows(),
        cols: ops.cols(),
        atoms: Vec::with_capacity(config.atoms),
        stats: Vec::with_capacity(config.atoms),
        early_stop: None,
        config: Some(config.clone()),
    };
    let initial_norm = ops.frobenius_sq().sqrt();
    timer.lap(Phase::Setup);
    if initial_norm == 0.0 {
        out.early_stop = Some(EarlyStop::ZeroResidual);
        return Ok(out);
    }
    for index in 0..config.atoms {
        timer.start_atom();
        let (atom, mut stats) = match fit_loop(ops, r, config, &mut rng, timer) {
            Ok(fit) => fit,
            Err(Error::ZeroImage) => {
                out.early_stop = Some(EarlyStop::DegenerateAtom);
                break;
            }
            Err(e) => return Err(e),
        };
        ops.deflate(&atom);
        stats.residual_norm = ops.frobenius_sq().sqrt();
        timer.lap(Phase::Deflate);
        timer.finish_atom(index, &stats);
        let vanished = stats.residual_norm < ZERO_RESIDUAL_REL * initial_norm;
        out.atoms.push(atom);
        out.stats.push(stats);
        if vanished && index + 1 < config.atoms {
            out.early_stop = Some(EarlyStop::ZeroResidual);
            break;
        }
    }
    Ok(out)
}
