use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::format_f64;
use crate::matrix::DataMatrix;

/// Rows parsed from a space-separated text file.
#[derive(Debug)]
pub(crate) struct TextRows {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Reads space-separated rows one line at a time. Every line must have the
/// same token count. An empty file yields zero rows.
pub(crate) fn read_rows(path: &Path) -> Result<TextRows> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut data = Vec::new();
    let mut cols: Option<usize> = None;
    let mut rows = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        let lineno = rows + 1;
        let content = line.strip_suffix('\n').unwrap_or(&line);
        let mut count = 0;
        for token in content.split(' ') {
            let x: f64 = token.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("malformed token {token:?} at column {}", count + 1),
            })?;
            if !x.is_finite() {
                return Err(Error::NonFinite { row: rows, col: count });
            }
            data.push(x);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: format!("ragged row: {count} entries, expected {c}"),
                })
            }
            Some(_) => {}
        }
        rows += 1;
    }
    Ok(TextRows {
        rows,
        cols: cols.unwrap_or(0),
        data,
    })
}

pub fn read_text_matrix(path: &Path) -> Result<DataMatrix> {
    let parsed = read_rows(path)?;
    if parsed.rows == 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "empty matrix file".into(),
        });
    }
    DataMatrix::new(parsed.rows, parsed.cols, parsed.data)
}

/// Writes rows of `values` (each `cols` long) as space-separated lines.
pub(crate) fn write_rows(path: &Path, cols: usize, values: &[f64]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    for row in values.chunks_exact(cols.max(1)) {
        for (i, &x) in row.iter().enumerate() {
            if i > 0 {
                w.write_all(b" ").map_err(io_err)?;
            }
            w.write_all(format_f64(x).as_bytes()).map_err(io_err)?;
        }
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_text_matrix(s: &DataMatrix, path: &Path) -> Result<()> {
    write_rows(path, s.cols(), s.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_str(content: &str) -> Result<DataMatrix> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        std::fs::write(&path, content).unwrap();
        read_text_matrix(&path)
    }

    #[test]
    fn reads_simple_matrix() {
        let m = read_str("1 2\n3 4\n").unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        assert_eq!(m.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(read_str("1 2\n3 4").unwrap(), m);
    }

    #[test]
    fn ragged_rows_fail_at_line() {
        match read_str("1 2\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_and_non_finite_tokens() {
        assert!(matches!(read_str("1  2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_str("1 x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_str("1 2\n\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read_str("1 2\n3 NaN\n"), Err(Error::NonFinite { row: 1, col: 1 })));
        assert!(matches!(read_str("inf\n"), Err(Error::NonFinite { row: 0, col: 0 })));
        assert!(matches!(read_str(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn writes_shortest_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let m = DataMatrix::from_rows(&[vec![1.0, 0.5], vec![-2.0, 0.1]]).unwrap();
        write_text_matrix(&m, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "1 0.5\n-2 0.1\n");
    }
}
