//! Atom building blocks: the unit-norm temporal basis vector, the sparse
//! spatial loading vector, and the sparsity parameter.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels;

/// Unit-norm length-`T` temporal pattern.
///
/// Vectors produced by [`BasisVector::normalized`] obey a sign convention:
/// the entry of largest magnitude (lowest index on ties) is non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisVector(Vec<f64>);

impl BasisVector {
    /// Normalizes `raw` to unit l2 norm and applies the sign convention.
    ///
    /// Returns the basis vector, the pre-normalization norm and whether the
    /// sign was flipped. Fails with [`Error::ZeroImage`] on the zero vector.
    pub fn normalized(mut raw: Vec<f64>) -> Result<(Self, f64, bool)> {
        let norm = kernels::l2_norm(&raw);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroImage);
        }
        let pivot = dominant_index(&raw);
        let flip = raw[pivot] < 0.0;
        let scale = if flip { -1.0 / norm } else { 1.0 / norm };
        for x in &mut raw {
            *x *= scale;
        }
        Ok((Self(raw), norm, flip))
    }

    /// Wraps stored values as-is. Used when loading factor files, where the
    /// values must survive unchanged.
    pub fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        kernels::l2_norm(&self.0)
    }

    /// `||self - other||_2`.
    pub fn distance(&self, other: &BasisVector) -> f64 {
        assert_eq!(self.len(), other.len(), "basis vector lengths differ");
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |acc, (a, b)| acc + (a - b) * (a - b))
            .sqrt()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        assert_eq!(self.len(), other.len(), "vector lengths differ");
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub(crate) fn negate(&mut self) {
        for x in &mut self.0 {
            *x = -*x;
        }
    }
}

/// Index of the largest-magnitude entry, lowest index on ties.
fn dominant_index(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if x.abs() > xs[best].abs() {
            best = i;
        }
    }
    best
}

/// Sparse length-`P` loading vector.
///
/// Indices are strictly ascending and in range; stored values are finite and
/// never exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingVector {
    len: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl LoadingVector {
    pub fn new(len: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMatrix(
                "loading indices are not strictly ascending".into(),
            ));
        }
        if let Some(&last) = indices.last() {
            if last >= len {
                return Err(Error::DimensionMismatch(format!(
                    "loading index {last} out of range for length {len}"
                )));
            }
        }
        if values.iter().any(|&x| x == 0.0 || !x.is_finite()) {
            return Err(Error::InvalidMatrix(
                "loading values must be finite and nonzero".into(),
            ));
        }
        Ok(Self {
            len,
            indices,
            values,
        })
    }

    pub(crate) fn from_parts_unchecked(len: usize, indices: Vec<usize>, values: Vec<f64>) -> Self {
        Self {
            len,
            indices,
            values,
        }
    }

    pub fn empty(len: usize) -> Self {
        Self {
            len,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Logical length `P`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, p: usize) -> f64 {
        self.indices
            .binary_search(&p)
            .map_or(0.0, |i| self.values[i])
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.len];
        for (p, x) in self.iter() {
            dense[p] = x;
        }
        dense
    }

    pub fn norm_sq(&self) -> f64 {
        kernels::sum_squares(&self.values)
    }

    pub(crate) fn negate(&mut self) {
        for x in &mut self.values {
            *x = -*x;
        }
    }
}

/// One rank-1 component `u v^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub u: BasisVector,
    pub v: LoadingVector,
}

impl Atom {
    /// Flips the sign of both factors; `u v^T` is unchanged.
    pub fn negated(&self) -> Atom {
        let mut out = self.clone();
        out.u.negate();
        out.v.negate();
        out
    }
}

/// Sparsity constraint on `v`: either a fraction of `P` or an absolute count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SparsityParam {
    Fraction(f64),
    Count(usize),
}

impl SparsityParam {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SparsityParam::Fraction(f) if !(f > 0.0 && f <= 1.0) => Err(Error::InvalidConfig(
                format!("sparsity fraction {f} is outside (0, 1]"),
            )),
            SparsityParam::Count(0) => {
                Err(Error::InvalidConfig("sparsity count must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Resolves the nonzero budget `r` for a loading vector of length `cols`.
    ///
    /// Fractions give `max(1, floor(f * P))`; counts are capped at `P`.
    pub fn resolve(&self, cols: usize) -> Result<usize> {
        self.validate()?;
        Ok(match *self {
            SparsityParam::Fraction(f) => {
                // Absorb representation error so that e.g. 0.29 * 100 gives 29.
                let scaled = f * cols as f64;
                let r = (scaled + scaled * 1e-12).floor() as usize;
                r.clamp(1, cols.max(1))
            }
            SparsityParam::Count(c) => c.min(cols),
        })
    }
}

impl fmt::Display for SparsityParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SparsityParam::Fraction(x) => {
                if x.fract() == 0.0 {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x}")
                }
            }
            SparsityParam::Count(c) => write!(f, "{c}"),
        }
    }
}

/// Integer literals (`"1"`, `"250"`) are counts; anything else must be a
/// decimal in `(0, 1]` and is a fraction (`"1.0"` means all of `P`).
impl FromStr for SparsityParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let param = if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
            let count = s
                .parse::<usize>()
                .map_err(|e| Error::InvalidConfig(format!("sparsity {s:?}: {e}")))?;
            SparsityParam::Count(count)
        } else {
            let f = s
                .parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("sparsity {s:?}: {e}")))?;
            SparsityParam::Fraction(f)
        };
        param.validate()?;
        Ok(param)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_convention_and_unit_norm() {
        let (u, norm, flip) = BasisVector::normalized(vec![1.0, -3.0, 2.0]).unwrap();
        assert!(flip);
        assert!((norm - 14f64.sqrt()).abs() < 1e-15);
        assert!((u.norm() - 1.0).abs() < 1e-12);
        assert!(u.as_slice()[1] > 0.0);
    }

    #[test]
    fn sign_convention_tie_goes_to_lowest_index() {
        let (u, _, flip) = BasisVector::normalized(vec![-2.0, 2.0]).unwrap();
        assert!(flip);
        assert!(u.as_slice()[0] > 0.0);
    }

    #[test]
    fn zero_vector_is_zero_image() {
        assert!(matches!(
            BasisVector::normalized(vec![0.0; 4]),
            Err(Error::ZeroImage)
        ));
    }

    #[test]
    fn loading_vector_invariants() {
        assert!(LoadingVector::new(4, vec![1, 1], vec![1.0, 2.0]).is_err());
        assert!(LoadingVector::new(4, vec![2, 1], vec![1.0, 2.0]).is_err());
        assert!(LoadingVector::new(4, vec![4], vec![1.0]).is_err());
        assert!(LoadingVector::new(4, vec![1], vec![0.0]).is_err());
        let v = LoadingVector::new(4, vec![0, 3], vec![2.0, -1.0]).unwrap();
        assert_eq!(v.to_dense(), vec![2.0, 0.0, 0.0, -1.0]);
        assert_eq!(v.get(3), -1.0);
        assert_eq!(v.get(2), 0.0);
    }

    #[test]
    fn sparsity_resolution() {
        assert_eq!(SparsityParam::Fraction(0.07).resolve(223_945).unwrap(), 15_676);
        assert_eq!(SparsityParam::Fraction(0.29).resolve(100).unwrap(), 29);
        assert_eq!(SparsityParam::Fraction(0.01).resolve(10).unwrap(), 1);
        assert_eq!(SparsityParam::Fraction(1.0).resolve(10).unwrap(), 10);
        assert_eq!(SparsityParam::Count(50).resolve(10).unwrap(), 10);
        assert!(SparsityParam::Fraction(0.0).resolve(10).is_err());
        assert!(SparsityParam::Fraction(1.5).resolve(10).is_err());
        assert!(SparsityParam::Count(0).resolve(10).is_err());
    }

    #[test]
    fn sparsity_parsing() {
        assert_eq!("1".parse::<SparsityParam>().unwrap(), SparsityParam::Count(1));
        assert_eq!("1.0".parse::<SparsityParam>().unwrap(), SparsityParam::Fraction(1.0));
        assert_eq!("0.07".parse::<SparsityParam>().unwrap(), SparsityParam::Fraction(0.07));
        assert_eq!("250".parse::<SparsityParam>().unwrap(), SparsityParam::Count(250));
        assert!("0".parse::<SparsityParam>().is_err());
        assert!("2.5".parse::<SparsityParam>().is_err());
        assert!("-0.1".parse::<SparsityParam>().is_err());
        assert!("abc".parse::<SparsityParam>().is_err());
    }
}
