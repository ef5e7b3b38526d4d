//! Factor files.
//!
//! The `D` file holds one temporal pattern per line (`K` lines of `T`
//! values). The `Z` file starts with a `K P` header followed by
//! `atom voxel value` triplets sorted by `(atom, voxel)`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::atom::{Atom, BasisVector, LoadingVector};
use crate::error::{Error, Result};
use crate::io::format_f64;
use crate::io::text::{read_rows, write_rows};
use crate::serial::Decomposition;

const UNIT_NORM_TOL: f64 = 1e-9;

pub fn write_decomposition(d: &Decomposition, d_path: impl AsRef<Path>, z_path: impl AsRef<Path>) -> Result<()> {
    let d_path = d_path.as_ref();
    let mut dense = Vec::with_capacity(d.len() * d.rows);
    for atom in &d.atoms {
        dense.extend_from_slice(atom.u.as_slice());
    }
    write_rows(d_path, d.rows, &dense)?;
    let loadings: Vec<&LoadingVector> = d.atoms.iter().map(|a| &a.v).collect();
    write_loadings(z_path.as_ref(), d.cols, &loadings)
}

pub fn write_loadings(path: &Path, cols: usize, loadings: &[&LoadingVector]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(w, "{} {}", loadings.len(), cols).map_err(io_err)?;
    for (k, v) in loadings.iter().enumerate() {
        for (p, x) in v.iter() {
            writeln!(w, "{k} {p} {}", format_f64(x)).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Temporal patterns from a `D` file, one per line.
pub fn read_temporal_patterns(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let parsed = read_rows(path.as_ref())?;
    Ok(parsed
        .data
        .chunks_exact(parsed.cols.max(1))
        .map(<[f64]>::to_vec)
        .collect())
}

/// Reads a `Z` file: returns `P` and one loading vector per atom.
pub fn read_loadings(path: impl AsRef<Path>) -> Result<(usize, Vec<LoadingVector>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(parse_err(1, "missing \"K P\" header".into())),
    };
    let fields: Vec<&str> = header.split(' ').collect();
    let (k, cols) = match fields.as_slice() {
        [k, p] => match (k.parse::<usize>(), p.parse::<usize>()) {
            (Ok(k), Ok(p)) => (k, p),
            _ => return Err(parse_err(1, format!("malformed header {header:?}"))),
        },
        _ => return Err(parse_err(1, format!("malformed header {header:?}"))),
    };

    let mut indices: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut last: Option<(usize, usize)> = None;
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split(' ').collect();
        let [a, p, x] = fields.as_slice() else {
            return Err(parse_err(lineno, format!("expected 3 fields, got {:?}", line)));
        };
        let (Ok(atom), Ok(voxel), Ok(value)) = (a.parse::<usize>(), p.parse::<usize>(), x.parse::<f64>()) else {
            return Err(parse_err(lineno, format!("malformed triplet {line:?}")));
        };
        if atom >= k || voxel >= cols {
            return Err(parse_err(
                lineno,
                format!("triplet ({atom}, {voxel}) outside {k}x{cols}"),
            ));
        }
        if last.is_some_and(|prev| prev >= (atom, voxel)) {
            return Err(parse_err(lineno, "triplets not sorted by (atom, voxel)".into()));
        }
        if value == 0.0 || !value.is_finite() {
            return Err(parse_err(lineno, format!("invalid loading value {x:?}")));
        }
        last = Some((atom, voxel));
        indices[atom].push(voxel);
        values[atom].push(value);
    }
    let loadings = indices
        .into_iter()
        .zip(values)
        .map(|(i, v)| LoadingVector::new(cols, i, v))
        .collect::<Result<Vec<_>>>()?;
    Ok((cols, loadings))
}

/// Loads a decomposition from factor files. `cols` is the expected `P`.
/// The result carries atoms only (no per-atom stats or config).
pub fn read_decomposition(d_path: impl AsRef<Path>, z_path: impl AsRef<Path>, cols: usize) -> Result<Decomposition> {
    let d_path = d_path.as_ref();
    let patterns = read_rows(d_path)?;
    let (z_cols, loadings) = read_loadings(z_path)?;
    if z_cols != cols {
        return Err(Error::DimensionMismatch(format!(
            "Z file has P = {z_cols}, expected {cols}"
        )));
    }
    if patterns.rows != loadings.len() {
        return Err(Error::DimensionMismatch(format!(
            "D file has {} atoms, Z file has {}",
            patterns.rows,
            loadings.len()
        )));
    }
    let rows = patterns.cols;
    let mut atoms = Vec::with_capacity(loadings.len());
    for (k, (u, v)) in patterns.data.chunks_exact(rows.max(1)).zip(loadings).enumerate() {
        let u = BasisVector::from_raw(u.to_vec());
        if (u.norm() - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidMatrix(format!(
                "D row {k} has norm {}, expected 1",
                u.norm()
            )));
        }
        atoms.push(Atom { u, v });
    }
    Ok(Decomposition {
        rows,
        cols,
        atoms,
        stats: Vec::new(),
        early_stop: None,
        config: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_atom() -> Decomposition {
        Decomposition {
            rows: 2,
            cols: 4,
            atoms: vec![Atom {
                u: BasisVector::from_raw(vec![1.0, 0.0]),
                v: LoadingVector::new(4, vec![2], vec![0.5]).unwrap(),
            }],
            stats: Vec::new(),
            early_stop: None,
            config: None,
        }
    }

    #[test]
    fn exact_file_contents() {
        let dir = tempfile::tempdir().unwrap();
        let (dp, zp) = (dir.path().join("d.txt"), dir.path().join("z.txt"));
        write_decomposition(&one_atom(), &dp, &zp).unwrap();
        assert_eq!(std::fs::read_to_string(&dp).unwrap(), "1 0\n");
        assert_eq!(std::fs::read_to_string(&zp).unwrap(), "1 4\n0 2 0.5\n");
        assert_eq!(read_decomposition(&dp, &zp, 4).unwrap(), one_atom());
    }

    #[test]
    fn header_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let (dp, zp) = (dir.path().join("d.txt"), dir.path().join("z.txt"));
        write_decomposition(&one_atom(), &dp, &zp).unwrap();
        assert!(matches!(read_decomposition(&dp, &zp, 5), Err(Error::DimensionMismatch(_))));
        std::fs::write(&zp, "2 4\n0 2 0.5\n").unwrap();
        assert!(matches!(read_decomposition(&dp, &zp, 4), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn rejects_unsorted_or_out_of_range_triplets() {
        let dir = tempfile::tempdir().unwrap();
        let zp = dir.path().join("z.txt");
        for bad in [
            "1 4\n0 3 1\n0 1 1\n",
            "1 4\n0 1 1\n0 1 2\n",
            "1 4\n0 4 1\n",
            "1 4\n1 0 1\n",
            "1 4\n0 0 0\n",
            "1 4\n0 0\n",
            "x 4\n",
            "",
        ] {
            std::fs::write(&zp, bad).unwrap();
            assert!(matches!(read_loadings(&zp), Err(Error::Parse { .. })), "{bad:?}");
        }
    }

    #[test]
    fn empty_decomposition() {
        let dir = tempfile::tempdir().unwrap();
        let (dp, zp) = (dir.path().join("d.txt"), dir.path().join("z.txt"));
        let mut d = one_atom();
        d.atoms.clear();
        write_decomposition(&d, &dp, &zp).unwrap();
        assert_eq!(std::fs::read_to_string(&zp).unwrap(), "0 4\n");
        let back = read_decomposition(&dp, &zp, 4).unwrap();
        assert!(back.is_empty());
    }
}
