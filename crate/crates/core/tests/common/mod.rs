//! Brute-force scalar oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use r1dl::{Atom, BasisVector, DataMatrix, LoadingVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform entries in [-1, 1).
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DataMatrix {
    DataMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

pub fn random_unit<R: Rng>(rng: &mut R, len: usize) -> BasisVector {
    loop {
        let raw: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        if let Ok((u, _, _)) = BasisVector::normalized(raw) {
            return u;
        }
    }
}

/// `||S - u w^T||_F^2` by a double loop over a dense `w`.
pub fn energy_sq_dense(s: &DataMatrix, u: &[f64], w: &[f64]) -> f64 {
    let mut acc = 0.0;
    for t in 0..s.rows() {
        for p in 0..s.cols() {
            let d = s.get(t, p) - u[t] * w[p];
            acc += d * d;
        }
    }
    acc
}

pub fn frobenius_sq(s: &DataMatrix) -> f64 {
    let mut acc = 0.0;
    for t in 0..s.rows() {
        for p in 0..s.cols() {
            acc += s.get(t, p) * s.get(t, p);
        }
    }
    acc
}

/// `S^T u` by a double loop.
pub fn dense_vt(s: &DataMatrix, u: &[f64]) -> Vec<f64> {
    (0..s.cols())
        .map(|p| (0..s.rows()).map(|t| s.get(t, p) * u[t]).sum())
        .collect()
}

/// `S w` by a double loop.
pub fn dense_mv(s: &DataMatrix, w: &[f64]) -> Vec<f64> {
    (0..s.rows())
        .map(|t| (0..s.cols()).map(|p| s.get(t, p) * w[p]).sum())
        .collect()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best `r`-sparse `w` for fixed unit `u` by enumerating every support of
/// size `min(r, P)` and its least-squares values. Returns the dense `w`
/// and its energy squared.
pub fn exhaustive_best_v(s: &DataMatrix, u: &[f64], r: usize) -> (Vec<f64>, f64) {
    let full = dense_vt(s, u);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for support in subsets(s.cols(), r.min(s.cols())) {
        let mut w = vec![0.0; s.cols()];
        for &p in &support {
            w[p] = full[p];
        }
        let e = energy_sq_dense(s, u, &w);
        if best.as_ref().is_none_or(|(_, b)| e < *b) {
            best = Some((w, e));
        }
    }
    best.unwrap()
}

/// Residual of one atom by a scalar loop.
pub fn deflate_dense(s: &DataMatrix, atom: &Atom) -> DataMatrix {
    let v = atom.v.to_dense();
    DataMatrix::from_fn(s.rows(), s.cols(), |t, p| s.get(t, p) - atom.u.as_slice()[t] * v[p]).unwrap()
}

/// Textbook Pearson correlation.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Shared active entries over the second pattern's active entries.
pub fn sor_oracle(p1: &[f64], p2: &[f64], threshold: f64) -> Option<f64> {
    let mut shared = 0usize;
    let mut base = 0usize;
    for (a, b) in p1.iter().zip(p2) {
        if b.abs() > threshold {
            base += 1;
            if a.abs() > threshold {
                shared += 1;
            }
        }
    }
    (base > 0).then(|| shared as f64 / base as f64)
}

/// Active-entry indices of a loading vector.
pub fn support(v: &LoadingVector) -> Vec<usize> {
    v.indices().to_vec()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
