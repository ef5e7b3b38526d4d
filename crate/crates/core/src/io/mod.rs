//! Matrix ingestion and persistence.
//!
//! * Text matrices: one row per line, entries separated by single spaces.
//! * Binary matrices: `"R1DL"`, version `u32 = 1`, `T: u64`, `P: u64`, then
//!   `T * P` little-endian `f64` entries in row-major order.
//! * Factor files: dense `D` text plus sparse `Z` triplets.
//! * Run reports: line-oriented `kind key=value ...` records.

pub mod binary;
pub mod factors;
pub mod report;
pub mod sampling;
pub mod text;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

pub use factors::{read_decomposition, read_loadings, read_temporal_patterns, write_decomposition};
pub use report::{read_report, write_report, RunReport};
pub use sampling::{sample_columns, SamplingSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Text,
    Binary,
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(MatrixFormat::Text),
            "binary" => Ok(MatrixFormat::Binary),
            other => Err(Error::InvalidConfig(format!("unknown matrix format {other:?}"))),
        }
    }
}

impl fmt::Display for MatrixFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixFormat::Text => "text",
            MatrixFormat::Binary => "binary",
        })
    }
}

pub fn read_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<DataMatrix> {
    match format {
        MatrixFormat::Text => text::read_text_matrix(path.as_ref()),
        MatrixFormat::Binary => binary::read_binary_matrix(path.as_ref()),
    }
}

pub fn write_matrix(s: &DataMatrix, path: impl AsRef<Path>, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Text => text::write_text_matrix(s, path.as_ref()),
        MatrixFormat::Binary => binary::write_binary_matrix(s, path.as_ref()),
    }
}

/// Shortest decimal that parses back to exactly `x`. Plain notation for
/// moderate magnitudes, exponent notation otherwise.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        for x in [0.0, -0.0, 1.0, 0.5, -3.25, 0.1, 1e-7, 1e300, -2.5e-300, f64::MIN_POSITIVE, 123456789.125] {
            let s = format_f64(x);
            assert!(!s.contains(' '));
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_f64(1.0), "1");
        assert_eq!(format_f64(0.5), "0.5");
        assert_eq!(format_f64(1e-7), "1e-7");
    }
}
