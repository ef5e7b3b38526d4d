//! Timing harness: seeded synthetic matrices decomposed by the serial path
//! and by the engine at several worker counts, reported as medians.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::atom::SparsityParam;
use crate::engine::{Engine, EngineConfig};
use crate::error::{Error, Result};
use crate::io::format_f64;
use crate::serial::{self, Decomposition, DecompositionConfig};
use crate::synthetic::{planted, PlantedSpec};
use crate::timing::{Phase, RunTimer};

/// One problem size: `T x P` with `K` atoms at sparsity `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchCase {
    pub rows: usize,
    pub cols: usize,
    pub atoms: usize,
    pub sparsity: SparsityParam,
}

/// Parses `TxPxKxR`, e.g. `176x50000x10x0.07`.
impl FromStr for BenchCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split('x').collect();
        let bad = || Error::InvalidConfig(format!("size {s:?} is not TxPxKxR"));
        let [t, p, k, r] = parts.as_slice() else {
            return Err(bad());
        };
        let num = |x: &str| x.parse::<usize>().map_err(|_| bad());
        let case = BenchCase {
            rows: num(t)?,
            cols: num(p)?,
            atoms: num(k)?,
            sparsity: r.parse()?,
        };
        if case.rows == 0 || case.cols == 0 || case.atoms == 0 {
            return Err(bad());
        }
        Ok(case)
    }
}

impl fmt::Display for BenchCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}x{}", self.rows, self.cols, self.atoms, self.sparsity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineChoice {
    Serial,
    Parallel { workers: usize },
}

impl EngineChoice {
    pub fn label(&self) -> &'static str {
        match self {
            EngineChoice::Serial => "serial",
            EngineChoice::Parallel { .. } => "parallel",
        }
    }

    pub fn workers(&self) -> usize {
        match *self {
            EngineChoice::Serial => 1,
            EngineChoice::Parallel { workers } => workers,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub cases: Vec<BenchCase>,
    pub engines: Vec<EngineChoice>,
    pub repetitions: usize,
    pub seed: u64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub case: BenchCase,
    pub engine: EngineChoice,
    /// Wall-clock seconds of each repetition.
    pub seconds: Vec<f64>,
    pub median_seconds: f64,
    /// Median seconds per phase across repetitions.
    pub phase_medians: Vec<(Phase, f64)>,
    pub atoms_found: usize,
    pub iterations: usize,
    /// Every repetition produced bit-identical atoms.
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFit {
    pub engine: EngineChoice,
    pub rows: usize,
    pub atoms: usize,
    /// `seconds ~ c0 + c1 * P + c2 * P^2`.
    pub coefficients: [f64; 3],
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of empty slice");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Bitwise fingerprint of the learned atoms.
pub fn fingerprint(d: &Decomposition) -> u64 {
    let mut h = DefaultHasher::new();
    for a in &d.atoms {
        for x in a.u.as_slice() {
            x.to_bits().hash(&mut h);
        }
        a.v.indices().hash(&mut h);
        for x in a.v.values() {
            x.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// The seeded synthetic input for a case: `K` planted factors with
/// decreasing strengths and light noise.
pub fn case_matrix(case: &BenchCase, seed: u64) -> Result<crate::matrix::DataMatrix> {
    let r = case.sparsity.resolve(case.cols)?;
    let factors = case.atoms.min(case.rows);
    let support = r.min(case.cols / factors).max(1);
    let spec = PlantedSpec {
        rows: case.rows,
        cols: case.cols,
        strengths: (0..factors).map(|k| (factors - k) as f64).collect(),
        support,
        noise: 0.01,
        seed,
    };
    Ok(planted(&spec)?.matrix)
}

pub fn benchmark(config: &BenchConfig) -> Result<BenchTable> {
    benchmark_with(config, |_| {})
}

/// Runs every case on every engine, calling `on_row` as rows complete.
/// Decompositions run one at a time.
pub fn benchmark_with(config: &BenchConfig, mut on_row: impl FnMut(&BenchRow)) -> Result<BenchTable> {
    if config.repetitions < 1 {
        return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
    }
    let mut table = BenchTable::default();
    for case in &config.cases {
        let s = case_matrix(case, config.seed)?;
        let dcfg = DecompositionConfig::new(case.atoms, case.sparsity)
            .with_seed(config.seed)
            .with_max_iter(config.max_iter);
        for &engine in &config.engines {
            let pool = match engine {
                EngineChoice::Serial => None,
                EngineChoice::Parallel { workers } => Some(Engine::new(EngineConfig::new(workers))?),
            };
            let mut seconds = Vec::with_capacity(config.repetitions);
            let mut phases: Vec<Vec<f64>> = vec![Vec::new(); Phase::ALL.len()];
            let mut prints = Vec::with_capacity(config.repetitions);
            let mut last = None;
            for _ in 0..config.repetitions {
                let mut timer = RunTimer::new();
                let d = match &pool {
                    None => serial::decompose_timed(&s, &dcfg, &mut timer)?,
                    Some(e) => e.decompose_matrix_timed(&s, &dcfg, &mut timer)?,
                };
                seconds.push(timer.total().as_secs_f64());
                for (i, (_, dur)) in timer.phases().enumerate() {
                    phases[i].push(dur.as_secs_f64());
                }
                prints.push(fingerprint(&d));
                last = Some(d);
            }
            let d = last.expect("at least one repetition");
            let row = BenchRow {
                case: *case,
                engine,
                median_seconds: median(&seconds),
                seconds,
                phase_medians: Phase::ALL
                    .into_iter()
                    .zip(&phases)
                    .map(|(p, xs)| (p, median(xs)))
                    .collect(),
                atoms_found: d.len(),
                iterations: d.stats.iter().map(|s| s.iterations).sum(),
                deterministic: prints.windows(2).all(|w| w[0] == w[1]),
            };
            on_row(&row);
            table.rows.push(row);
        }
    }
    Ok(table)
}

impl BenchTable {
    /// Least-squares quadratic of median seconds against `P`, one per
    /// (engine, T, K) group with at least three distinct sizes.
    pub fn quadratic_fits(&self) -> Vec<QuadraticFit> {
        let mut groups: Vec<(EngineChoice, usize, usize)> = Vec::new();
        for r in &self.rows {
            let key = (r.engine, r.case.rows, r.case.atoms);
            if !groups.contains(&key) {
                groups.push(key);
            }
        }
        groups
            .into_iter()
            .filter_map(|(engine, rows, atoms)| {
                let (xs, ys): (Vec<f64>, Vec<f64>) = self
                    .rows
                    .iter()
                    .filter(|r| r.engine == engine && r.case.rows == rows && r.case.atoms == atoms)
                    .map(|r| (r.case.cols as f64, r.median_seconds))
                    .unzip();
                let (coefficients, r_squared) = fit_quadratic(&xs, &ys)?;
                Some(QuadraticFit {
                    engine,
                    rows,
                    atoms,
                    coefficients,
                    r_squared,
                    points: xs.len(),
                })
            })
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io_err = |e| Error::io(path, e);
        writeln!(
            w,
            "rows,cols,atoms,sparsity,engine,workers,reps,median_seconds,atoms_found,iterations,deterministic"
        )
        .map_err(io_err)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.case.rows,
                r.case.cols,
                r.case.atoms,
                r.case.sparsity,
                r.engine.label(),
                r.engine.workers(),
                r.seconds.len(),
                format_f64(r.median_seconds),
                r.atoms_found,
                r.iterations,
                r.deterministic
            )
            .map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    /// Same `kind key=value` record syntax as run reports.
    pub fn write_records(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io_err = |e| Error::io(path, e);
        writeln!(w, "# r1dl bench report v1").map_err(io_err)?;
        for r in &self.rows {
            let phases: Vec<String> = r
                .phase_medians
                .iter()
                .map(|(p, s)| format!("{}={}", p.name(), format_f64(*s)))
                .collect();
            writeln!(
                w,
                "case rows={} cols={} atoms={} sparsity={} engine={} workers={} reps={} median_seconds={} {}",
                r.case.rows,
                r.case.cols,
                r.case.atoms,
                r.case.sparsity,
                r.engine.label(),
                r.engine.workers(),
                r.seconds.len(),
                format_f64(r.median_seconds),
                phases.join(" ")
            )
            .map_err(io_err)?;
        }
        for f in self.quadratic_fits() {
            writeln!(
                w,
                "fit engine={} workers={} rows={} atoms={} c0={} c1={} c2={} r_squared={}",
                f.engine.label(),
                f.engine.workers(),
                f.rows,
                f.atoms,
                format_f64(f.coefficients[0]),
                format_f64(f.coefficients[1]),
                format_f64(f.coefficients[2]),
                format_f64(f.r_squared)
            )
            .map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}

/// Least-squares `y ~ c0 + c1 x + c2 x^2`. Returns coefficients and `R^2`,
/// or `None` with fewer than three distinct `x`.
pub fn fit_quadratic(xs: &[f64], ys: &[f64]) -> Option<([f64; 3], f64)> {
    let mut distinct = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 || xs.len() != ys.len() {
        return None;
    }
    // Scale x to [0, 1] to keep the normal equations well conditioned.
    let scale = distinct.last().copied().unwrap_or(1.0).abs().max(f64::MIN_POSITIVE);
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let z = x / scale;
        let row = [1.0, z, z * z];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let c = solve3(ata, aty)?;
    let coefficients = [c[0], c[1] / scale, c[2] / (scale * scale)];
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let z = x / scale;
        let pred = c[0] + c[1] * z + c[2] * z * z;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean) * (y - mean);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some((coefficients, r_squared))
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_case_specs() {
        let c: BenchCase = "176x50000x10x0.07".parse().unwrap();
        assert_eq!((c.rows, c.cols, c.atoms), (176, 50000, 10));
        assert_eq!(c.sparsity, SparsityParam::Fraction(0.07));
        assert_eq!(c.to_string(), "176x50000x10x0.07");
        let c: BenchCase = "8x100x2x5".parse().unwrap();
        assert_eq!(c.sparsity, SparsityParam::Count(5));
        assert!("8x100x2".parse::<BenchCase>().is_err());
        assert!("0x100x2x5".parse::<BenchCase>().is_err());
    }

    #[test]
    fn median_rule() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[7.0]), 7.0);
    }

    #[test]
    fn quadratic_fit_recovers_exact_polynomial() {
        let xs = [1.0e4, 2.0e4, 3.0e4, 5.0e4];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 + 2e-5 * x + 3e-10 * x * x).collect();
        let (c, r2) = fit_quadratic(&xs, &ys).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-9);
        assert!((c[1] - 2e-5).abs() < 1e-13);
        assert!((c[2] - 3e-10).abs() < 1e-18);
        assert!((r2 - 1.0).abs() < 1e-12);
        assert!(fit_quadratic(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).is_none());
    }

    #[test]
    fn small_benchmark_runs() {
        let cfg = BenchConfig {
            cases: vec!["6x200x2x0.1".parse().unwrap()],
            engines: vec![EngineChoice::Serial, EngineChoice::Parallel { workers: 1 }],
            repetitions: 3,
            seed: 4,
            max_iter: 100,
        };
        let table = benchmark(&cfg).unwrap();
        assert_eq!(table.rows.len(), 2);
        for row in &table.rows {
            assert_eq!(row.seconds.len(), 3);
            assert_eq!(row.median_seconds, median(&row.seconds));
            assert!(row.deterministic);
        }
        let dir = tempfile::tempdir().unwrap();
        table.write_csv(dir.path().join("b.csv")).unwrap();
        table.write_records(dir.path().join("b.txt")).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }
}
