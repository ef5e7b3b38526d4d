//! Evaluation utilities: spatial overlap rate, Pearson correlation, and
//! matching of learned temporal patterns against reference series.

use crate::atom::LoadingVector;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Default binarization threshold on `|value|`.
pub const DEFAULT_THRESHOLD: f64 = 1e-6;

/// A dense spatial map, binarized at `|value| > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialPattern {
    values: Vec<f64>,
    threshold: f64,
}

impl SpatialPattern {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn from_loading(v: &LoadingVector) -> Self {
        Self::new(v.to_dense())
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold {threshold} must be non-negative"
            )));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_active(&self, p: usize) -> bool {
        self.values[p].abs() > self.threshold
    }

    /// Positions with `|value| > threshold`, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&p| self.is_active(p)).collect()
    }
}

/// `|support(p1) ∩ support(p2)| / |support(p2)|`.
pub fn spatial_overlap_rate(p1: &SpatialPattern, p2: &SpatialPattern) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(Error::DimensionMismatch(format!(
            "spatial patterns have lengths {} and {}",
            p1.len(),
            p2.len()
        )));
    }
    let mut reference = 0usize;
    let mut shared = 0usize;
    for p in 0..p2.len() {
        if p2.is_active(p) {
            reference += 1;
            if p1.is_active(p) {
                shared += 1;
            }
        }
    }
    if reference == 0 {
        return Err(Error::EmptyReference);
    }
    Ok(shared as f64 / reference as f64)
}

/// Sample Pearson correlation, clamped to `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "pearson inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidConfig("pearson needs at least 2 samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if negligible_variance(sxx, x) || negligible_variance(syy, y) {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Sum of squared deviations that is indistinguishable from rounding noise.
fn negligible_variance(ss: f64, xs: &[f64]) -> bool {
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    ss <= (f64::EPSILON * scale).powi(2) * xs.len() as f64
}

pub fn has_variance(x: &[f64]) -> bool {
    if x.len() < 2 {
        return false;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let ss: f64 = x.iter().map(|a| (a - mean) * (a - mean)).sum();
    !negligible_variance(ss, x)
}

/// `M` reference time series of a common length `T`, each with nonzero
/// variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSeries {
    series: Vec<Vec<f64>>,
}

impl ReferenceSeries {
    pub fn new(series: Vec<Vec<f64>>) -> Result<Self> {
        let len = series.first().map_or(0, Vec::len);
        for (i, s) in series.iter().enumerate() {
            if s.len() != len {
                return Err(Error::DimensionMismatch(format!(
                    "reference {i} has length {}, expected {len}",
                    s.len()
                )));
            }
            if !has_variance(s) {
                return Err(Error::ZeroVariance);
            }
        }
        Ok(Self { series })
    }

    /// One reference per matrix row.
    pub fn from_matrix(m: &DataMatrix) -> Result<Self> {
        Self::new(m.row_iter().map(<[f64]>::to_vec).collect())
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn series(&self) -> &[Vec<f64>] {
        &self.series
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomMatch {
    pub reference: usize,
    pub atom: usize,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub matches: Vec<AtomMatch>,
    /// Atoms left out because their temporal pattern has zero variance.
    pub skipped_atoms: Vec<usize>,
}

/// For each reference, the atom whose temporal pattern has the highest
/// signed Pearson correlation with it. Lowest atom index wins ties.
pub fn match_atoms<D: AsRef<[f64]>>(patterns: &[D], refs: &ReferenceSeries) -> Result<MatchReport> {
    if patterns.is_empty() {
        return Err(Error::InvalidConfig("no temporal patterns to match".into()));
    }
    for (k, d) in patterns.iter().enumerate() {
        if let Some(r) = refs.series.first() {
            if d.as_ref().len() != r.len() {
                return Err(Error::DimensionMismatch(format!(
                    "atom {k} has length {}, references have length {}",
                    d.as_ref().len(),
                    r.len()
                )));
            }
        }
    }
    let (eligible, skipped_atoms): (Vec<usize>, Vec<usize>) =
        (0..patterns.len()).partition(|&k| has_variance(patterns[k].as_ref()));
    if eligible.is_empty() {
        return Err(Error::NoEligibleAtom);
    }
    let mut matches = Vec::with_capacity(refs.len());
    for (reference, series) in refs.series.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for &k in &eligible {
            let c = pearson(patterns[k].as_ref(), series)?;
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((k, c));
            }
        }
        let (atom, correlation) = best.expect("at least one eligible atom");
        matches.push(AtomMatch {
            reference,
            atom,
            correlation,
        });
    }
    Ok(MatchReport {
        matches,
        skipped_atoms,
    })
}

/// Entry-wise mean of equal-length maps, e.g. the same atom's loadings
/// from several runs.
pub fn column_mean<D: AsRef<[f64]>>(maps: &[D]) -> Result<Vec<f64>> {
    let first = maps
        .first()
        .ok_or_else(|| Error::InvalidConfig("no maps to average".into()))?;
    let len = first.as_ref().len();
    let mut acc = vec![0.0; len];
    for (i, m) in maps.iter().enumerate() {
        let m = m.as_ref();
        if m.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "map {i} has length {}, expected {len}",
                m.len()
            )));
        }
        for (a, &x) in acc.iter_mut().zip(m) {
            *a += x;
        }
    }
    let n = maps.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}
