//! Run reports.
//!
//! A report is plain text, one record per line:
//!
//! ```text
//! # r1dl run report v1
//! run rows=176 cols=20000 atoms_requested=10 atoms_found=10 ...
//! phase name=v_update seconds=1.25
//! total seconds=3.5
//! atom index=0 iterations=12 converged=true residual_norm=812.3 seconds=0.31
//! ```
//!
//! Each record is a kind followed by `key=value` fields; values never
//! contain spaces. Phase laps tile the run, so phase seconds add up to the
//! total.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::format_f64;
use crate::serial::Decomposition;
use crate::timing::RunTimer;

pub const REPORT_HEADER: &str = "# r1dl run report v1";

#[derive(Debug, Clone, PartialEq)]
pub struct AtomRecord {
    pub index: usize,
    pub iterations: usize,
    pub converged: bool,
    pub residual_norm: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    /// Ordered run-level fields (dimensions, config, engine).
    pub run: Vec<(String, String)>,
    pub phases: Vec<(String, f64)>,
    pub total_seconds: f64,
    pub atoms: Vec<AtomRecord>,
}

impl RunReport {
    /// Collects dimensions, config, per-atom stats and phase timings.
    pub fn from_run(d: &Decomposition, timer: &RunTimer<'_>) -> Self {
        let mut report = RunReport::default()
            .with("rows", d.rows)
            .with("cols", d.cols)
            .with("atoms_found", d.len());
        if let Some(cfg) = &d.config {
            report = report
                .with("atoms_requested", cfg.atoms)
                .with("sparsity", cfg.sparsity)
                .with(
                    "resolved_r",
                    cfg.sparsity.resolve(d.cols).map_or(0, |r| r),
                )
                .with("tol", format_f64(cfg.tol))
                .with("max_iter", cfg.max_iter)
                .with("seed", cfg.seed);
        }
        report = report.with("early_stop", d.early_stop.map_or("none", |e| e.name()));
        report.phases = timer
            .phases()
            .map(|(p, dur)| (p.name().to_string(), dur.as_secs_f64()))
            .collect();
        report.total_seconds = timer.total().as_secs_f64();
        let seconds: Vec<f64> = timer.atoms().iter().map(|a| a.seconds).collect();
        report.atoms = d
            .stats
            .iter()
            .enumerate()
            .map(|(index, s)| AtomRecord {
                index,
                iterations: s.iterations,
                converged: s.converged,
                residual_norm: s.residual_norm,
                seconds: seconds.get(index).copied().unwrap_or(0.0),
            })
            .collect();
        report
    }

    /// Appends (or replaces) a run-level field.
    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        let value = value.to_string();
        match self.run.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.run.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.run.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn phase_sum(&self) -> f64 {
        self.phases.iter().map(|(_, s)| s).sum()
    }
}

pub fn write_report(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(w, "{REPORT_HEADER}").map_err(io_err)?;
    let mut fields = Vec::new();
    for (k, v) in &report.run {
        if v.contains(char::is_whitespace) || k.contains(char::is_whitespace) || k.contains('=') {
            return Err(Error::InvalidConfig(format!("report field {k}={v:?} contains whitespace")));
        }
        fields.push(format!("{k}={v}"));
    }
    if fields.is_empty() {
        writeln!(w, "run").map_err(io_err)?;
    } else {
        writeln!(w, "run {}", fields.join(" ")).map_err(io_err)?;
    }
    for (name, secs) in &report.phases {
        writeln!(w, "phase name={name} seconds={}", format_f64(*secs)).map_err(io_err)?;
    }
    writeln!(w, "total seconds={}", format_f64(report.total_seconds)).map_err(io_err)?;
    for a in &report.atoms {
        writeln!(
            w,
            "atom index={} iterations={} converged={} residual_norm={} seconds={}",
            a.index,
            a.iterations,
            a.converged,
            format_f64(a.residual_norm),
            format_f64(a.seconds)
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// One parsed record: its kind and ordered fields.
pub type Record = (String, Vec<(String, String)>);

/// Splits a `kind key=value ...` line.
pub fn parse_record(line: &str) -> Option<Record> {
    let mut parts = line.split(' ');
    let kind = parts.next()?.to_string();
    let fields = parts
        .map(|f| f.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect::<Option<Vec<_>>>()?;
    Some((kind, fields))
}

pub fn read_records(path: &Path) -> Result<Vec<(usize, Record)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let record = parse_record(&line).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("malformed record {line:?}"),
        })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<RunReport> {
    let path = path.as_ref();
    let mut report = RunReport::default();
    for (line, (kind, fields)) in read_records(path)? {
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let field = |key: &str| -> Result<&str> {
            fields
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| err(format!("{kind} record lacks {key}")))
        };
        let num = |key: &str| -> Result<f64> {
            let raw = field(key)?;
            raw.parse().map_err(|_| err(format!("{key}={raw:?} is not a number")))
        };
        let int = |key: &str| -> Result<usize> {
            let raw = field(key)?;
            raw.parse().map_err(|_| err(format!("{key}={raw:?} is not an integer")))
        };
        match kind.as_str() {
            "run" => report.run = fields.clone(),
            "phase" => report.phases.push((field("name")?.to_string(), num("seconds")?)),
            "total" => report.total_seconds = num("seconds")?,
            "atom" => {
                let converged = match field("converged")? {
                    "true" => true,
                    "false" => false,
                    other => return Err(err(format!("converged={other:?}"))),
                };
                report.atoms.push(AtomRecord {
                    index: int("index")?,
                    iterations: int("iterations")?,
                    converged,
                    residual_norm: num("residual_norm")?,
                    seconds: num("seconds")?,
                });
            }
            other => return Err(err(format!("unknown record kind {other:?}"))),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::SparsityParam;
    use crate::matrix::DataMatrix;
    use crate::serial::{decompose_timed, DecompositionConfig};

    #[test]
    fn empty_decomposition_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.txt");
        let s = DataMatrix::zeros(3, 3).unwrap();
        let mut timer = RunTimer::new();
        let d = decompose_timed(&s, &DecompositionConfig::new(2, SparsityParam::Count(1)), &mut timer).unwrap();
        let report = RunReport::from_run(&d, &timer);
        write_report(&report, &path).unwrap();
        let back = read_report(&path).unwrap();
        assert!(back.atoms.is_empty());
        assert_eq!(back.get("early_stop"), Some("zero_residual"));
        assert_eq!(back, report);
    }

    #[test]
    fn three_atoms_parse_back_consistently() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.txt");
        let s = crate::synthetic::gaussian(8, 40, 5).unwrap();
        let mut timer = RunTimer::new();
        let cfg = DecompositionConfig::new(3, SparsityParam::Count(6)).with_seed(2);
        let d = decompose_timed(&s, &cfg, &mut timer).unwrap();
        let report = RunReport::from_run(&d, &timer).with("engine", "serial");
        write_report(&report, &path).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.atoms.len(), 3);
        assert!(back.atoms.windows(2).all(|w| w[1].residual_norm <= w[0].residual_norm));
        assert!((back.total_seconds - back.phase_sum()).abs() < 1e-3);
        assert_eq!(back.get("resolved_r"), Some("6"));
    }

    #[test]
    fn malformed_records_fail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.txt");
        std::fs::write(&path, "run a=1\natom index=x iterations=1 converged=true residual_norm=1 seconds=0\n").unwrap();
        assert!(matches!(read_report(&path), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&path, "bogus\n").unwrap();
        assert!(read_report(&path).is_err());
    }
}
