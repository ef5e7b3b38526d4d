//! Dense and sparse inner loops shared by the serial path and the
//! partitioned engine. Both paths call exactly these functions so that a
//! single partition reproduces the serial result bit for bit.

use crate::atom::LoadingVector;

/// `out += sum_i weights[i] * rows[i]`, rows taken in order from a row-major
/// block with `cols` columns.
pub(crate) fn accumulate_weighted_rows(block: &[f64], cols: usize, weights: &[f64], out: &mut [f64]) {
    debug_assert_eq!(block.len(), cols * weights.len());
    debug_assert_eq!(out.len(), cols);
    for (row, &w) in block.chunks_exact(cols).zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(row) {
            *o += w * x;
        }
    }
}

/// `<row, v>` over the support of `v`, summed in ascending index order.
#[inline]
pub(crate) fn sparse_row_dot(row: &[f64], v: &LoadingVector) -> f64 {
    let mut acc = 0.0;
    for (&p, &x) in v.indices().iter().zip(v.values()) {
        acc += row[p] * x;
    }
    acc
}

/// `row -= scale * v` over the support of `v`.
#[inline]
pub(crate) fn deflate_row(row: &mut [f64], scale: f64, v: &LoadingVector) {
    for (&p, &x) in v.indices().iter().zip(v.values()) {
        row[p] -= scale * x;
    }
}

/// Sum of squares with a single sequential accumulator.
#[inline]
pub(crate) fn sum_squares(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |acc, &x| acc + x * x)
}

#[inline]
pub(crate) fn l2_norm(xs: &[f64]) -> f64 {
    sum_squares(xs).sqrt()
}

/// In-place element-wise sum `acc += other`.
pub(crate) fn add_assign(acc: &mut [f64], other: &[f64]) {
    for (a, &b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}
