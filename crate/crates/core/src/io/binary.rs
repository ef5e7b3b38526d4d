use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

pub const MAGIC: [u8; 4] = *b"R1DL";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 24;

/// Exact file size for a `rows x cols` binary matrix.
pub fn binary_file_len(rows: u64, cols: u64) -> Option<u64> {
    rows.checked_mul(cols)?.checked_mul(8)?.checked_add(HEADER_LEN)
}

pub fn read_binary_matrix(path: &Path) -> Result<DataMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let actual_len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut reader = BufReader::new(file);
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message,
    };

    let mut header = [0u8; HEADER_LEN as usize];
    reader.read_exact(&mut header).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => parse_err("truncated header".into()),
        _ => Error::io(path, e),
    })?;
    if header[0..4] != MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
        });
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::BadVersion {
            path: path.to_path_buf(),
            version,
        });
    }
    let rows = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(header[16..24].try_into().unwrap());
    if rows == 0 || cols == 0 {
        return Err(parse_err(format!("empty shape {rows}x{cols}")));
    }
    match binary_file_len(rows, cols) {
        Some(expected) if expected == actual_len => {}
        Some(expected) => {
            return Err(parse_err(format!(
                "file is {actual_len} bytes, expected {expected} for {rows}x{cols}"
            )))
        }
        None => return Err(parse_err(format!("shape {rows}x{cols} overflows"))),
    }
    let (rows, cols) = (rows as usize, cols as usize);

    let mut data = Vec::with_capacity(rows * cols);
    let mut buf = vec![0u8; cols * 8];
    for t in 0..rows {
        reader.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
        for (p, chunk) in buf.chunks_exact(8).enumerate() {
            let x = f64::from_le_bytes(chunk.try_into().unwrap());
            if !x.is_finite() {
                return Err(Error::NonFinite { row: t, col: p });
            }
            data.push(x);
        }
    }
    DataMatrix::new(rows, cols, data)
}

pub fn write_binary_matrix(s: &DataMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(&MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(s.rows() as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(s.cols() as u64).to_le_bytes()).map_err(io_err)?;
    let mut buf = Vec::with_capacity(s.cols() * 8);
    for row in s.row_iter() {
        buf.clear();
        for &x in row {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let m = DataMatrix::from_rows(&[vec![1.0, -2.0, 0.5]]).unwrap();
        write_binary_matrix(&m, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 24 + 8 * 3);
        assert_eq!(&bytes[0..4], b"R1DL");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..16], &1u64.to_le_bytes());
        assert_eq!(&bytes[16..24], &3u64.to_le_bytes());
        assert_eq!(&bytes[32..40], &(-2.0f64).to_le_bytes());
        assert_eq!(read_binary_matrix(&path).unwrap(), m);
    }

    #[test]
    fn rejects_bad_headers_and_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let m = DataMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        write_binary_matrix(&m, &path).unwrap();
        let good = std::fs::read(&path).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_binary_matrix(&path), Err(Error::BadMagic { .. })));

        let mut bad = good.clone();
        bad[4] = 2;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_binary_matrix(&path), Err(Error::BadVersion { version: 2, .. })));

        let mut bad = good.clone();
        bad.push(0);
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_binary_matrix(&path), Err(Error::Parse { .. })));

        std::fs::write(&path, &good[..10]).unwrap();
        assert!(matches!(read_binary_matrix(&path), Err(Error::Parse { .. })));

        let mut bad = good.clone();
        bad[24..32].copy_from_slice(&f64::INFINITY.to_le_bytes());
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_binary_matrix(&path), Err(Error::NonFinite { row: 0, col: 0 })));
    }
}
