//! The `r1dl` command line.
//!
//! Exit codes: 0 success, 2 invalid flags, 3 I/O or parse errors,
//! 4 numerical degeneracy (no atoms, empty reference support).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::atom::SparsityParam;
use crate::bench::{benchmark_with, BenchCase, BenchConfig, EngineChoice};
use crate::engine::{default_workers, Engine, EngineConfig, WORKERS_ENV};
use crate::error::{Error, Result};
use crate::io::{
    read_loadings, read_matrix, read_temporal_patterns, sample_columns, write_decomposition, write_matrix,
    write_report, MatrixFormat, RunReport, SamplingSpec,
};
use crate::metrics::{match_atoms, spatial_overlap_rate, ReferenceSeries, SpatialPattern, DEFAULT_THRESHOLD};
use crate::serial::{self, DecompositionConfig};
use crate::timing::{AtomProgress, Phase, RunTimer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "r1dl", version, about = "Sparse rank-1 dictionary learning for wide dense matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn K sparse rank-1 atoms and write the D and Z factor files.
    Decompose(DecomposeArgs),
    /// Uniformly sample a fraction of the columns.
    Sample(SampleArgs),
    /// Spatial overlap rate between two atoms' loadings.
    Sor(SorArgs),
    /// Match reference time series to the best-correlated atoms.
    Match(MatchArgs),
    /// Time the serial and parallel paths on synthetic data.
    Bench(BenchArgs),
    /// Convert a matrix between text and binary formats.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "text")]
    format: MatrixFormat,
    /// Number of atoms to learn.
    #[arg(short = 'K', long = "atoms")]
    atoms: usize,
    /// Nonzeros per loading. An integer literal is a count ("1" keeps one
    /// entry); a decimal in (0, 1] is a fraction of the columns ("1.0" keeps
    /// all of them).
    #[arg(long)]
    sparsity: SparsityParam,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads. Defaults to R1DL_WORKERS, then the available cores.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Row partitions. Defaults to the worker count, capped at the row count.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    partitions: Option<u64>,
    /// Run the single-threaded path instead of the engine.
    #[arg(long, conflicts_with_all = ["workers", "partitions"])]
    serial: bool,
    #[arg(long)]
    out_d: PathBuf,
    #[arg(long)]
    out_z: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "text")]
    format: MatrixFormat,
    /// Fraction of columns to keep, in (0, 1].
    #[arg(long, value_parser = parse_rate)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Ascending kept column indices, one per line.
    #[arg(long)]
    indices: PathBuf,
}

#[derive(Debug, Args)]
struct SorArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    atom_a: usize,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    atom_b: usize,
    /// Entries with magnitude above this count as active.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
}

#[derive(Debug, Args)]
struct MatchArgs {
    /// Temporal patterns, one atom per line.
    #[arg(long)]
    d: PathBuf,
    /// Reference series in text format, one per line.
    #[arg(long)]
    refs: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated TxPxKxR cases, e.g. 176x20000x10x0.07,176x40000x10x0.07
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<BenchCase>,
    /// Comma-separated worker counts for the parallel path.
    #[arg(long, value_delimiter = ',', default_value = "1", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Vec<u64>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Record-format report with per-phase medians and quadratic fits.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    from: MatrixFormat,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    to: MatrixFormat,
}

fn parse_rate(raw: &str) -> std::result::Result<f64, String> {
    let rate: f64 = raw.parse().map_err(|_| format!("{raw:?} is not a number"))?;
    SamplingSpec::new(rate, 0).map_err(|e| e.to_string())?;
    Ok(rate)
}

/// Maps an error to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) | Error::InvalidPartitioning { .. } => EXIT_USAGE,
        Error::ZeroImage
        | Error::DegenerateAtom { .. }
        | Error::EmptyReference
        | Error::ZeroVariance
        | Error::NoEligibleAtom => EXIT_DEGENERATE,
        Error::InvalidMatrix(_)
        | Error::Parse { .. }
        | Error::NonFinite { .. }
        | Error::BadMagic { .. }
        | Error::BadVersion { .. }
        | Error::DimensionMismatch(_)
        | Error::Io { .. } => EXIT_IO,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Decompose(a) => decompose(a),
        Command::Sample(a) => sample(a),
        Command::Sor(a) => sor(a),
        Command::Match(a) => match_refs(a),
        Command::Bench(a) => bench(a),
        Command::Convert(a) => convert(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("r1dl: error: {e}");
            exit_code(&e)
        }
    }
}

fn resolve_workers(flag: Option<u64>) -> Result<usize> {
    match flag {
        Some(w) => Ok(w as usize),
        None => default_workers(std::env::var(WORKERS_ENV).ok().as_deref()),
    }
}

fn print_progress(p: &AtomProgress) {
    eprintln!(
        "atom {}: iterations={} converged={} residual_norm={:.6e} seconds={:.3}",
        p.index, p.iterations, p.converged, p.residual_norm, p.seconds
    );
}

fn decompose(a: DecomposeArgs) -> Result<i32> {
    let config = DecompositionConfig::new(a.atoms, a.sparsity)
        .with_tol(a.tol)
        .with_max_iter(a.max_iter)
        .with_seed(a.seed);
    config.validate()?;
    let engine = if a.serial {
        None
    } else {
        let mut ec = EngineConfig::new(resolve_workers(a.workers)?);
        if let Some(p) = a.partitions {
            ec = ec.with_partitions(p as usize);
        }
        Some(Engine::new(ec)?)
    };

    let mut timer = RunTimer::new().with_progress(print_progress);
    let s = read_matrix(&a.input, a.format)?;
    timer.lap(Phase::Load);
    let d = match &engine {
        None => serial::decompose_timed(&s, &config, &mut timer)?,
        Some(e) => e.decompose_matrix_timed(&s, &config, &mut timer)?,
    };
    drop(s);
    if d.is_empty() && d.early_stop.is_some() {
        eprintln!("r1dl: error: no atoms produced, the input is zero or degenerate");
        return Ok(EXIT_DEGENERATE);
    }
    write_decomposition(&d, &a.out_d, &a.out_z)?;
    timer.lap(Phase::Write);
    if let Some(stop) = d.early_stop {
        eprintln!(
            "r1dl: warning: stopped after {} of {} atoms ({})",
            d.len(),
            a.atoms,
            stop.name()
        );
    }
    if let Some(path) = &a.report {
        let mut report = RunReport::from_run(&d, &timer);
        report = match &engine {
            None => report.with("engine", "serial").with("workers", 1).with("partitions", 1),
            Some(e) => report
                .with("engine", "parallel")
                .with("workers", e.workers())
                .with("partitions", e.config().partitions_for(d.rows)),
        };
        write_report(&report, path)?;
    }
    Ok(EXIT_OK)
}

fn sample(a: SampleArgs) -> Result<i32> {
    let spec = SamplingSpec::new(a.rate, a.seed)?;
    let s = read_matrix(&a.input, a.format)?;
    let (sampled, indices) = sample_columns(&s, &spec)?;
    write_matrix(&sampled, &a.output, a.format)?;
    write_indices(&a.indices, &indices)?;
    Ok(EXIT_OK)
}

fn write_indices(path: &Path, indices: &[usize]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for i in indices {
        writeln!(w, "{i}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn load_pattern(path: &Path, atom: usize, threshold: f64) -> Result<SpatialPattern> {
    let (cols, loadings) = read_loadings(path)?;
    let v = loadings.get(atom).ok_or_else(|| {
        Error::DimensionMismatch(format!(
            "{} has {} atoms, no atom {atom}",
            path.display(),
            loadings.len()
        ))
    })?;
    debug_assert_eq!(v.len(), cols);
    SpatialPattern::from_loading(v).with_threshold(threshold)
}

fn sor(a: SorArgs) -> Result<i32> {
    let p1 = load_pattern(&a.a, a.atom_a, a.threshold)?;
    let p2 = load_pattern(&a.b, a.atom_b, a.threshold)?;
    let rate = spatial_overlap_rate(&p1, &p2)?;
    println!("{rate:.4}");
    Ok(EXIT_OK)
}

fn match_refs(a: MatchArgs) -> Result<i32> {
    let patterns = read_temporal_patterns(&a.d)?;
    let refs = ReferenceSeries::from_matrix(&read_matrix(&a.refs, MatrixFormat::Text)?)?;
    let report = match_atoms(&patterns, &refs)?;
    for k in &report.skipped_atoms {
        eprintln!("r1dl: warning: atom {k} has a constant temporal pattern and was skipped");
    }
    println!("reference atom correlation");
    for m in &report.matches {
        println!("{} {} {:.6}", m.reference, m.atom, m.correlation);
    }
    Ok(EXIT_OK)
}

fn bench(a: BenchArgs) -> Result<i32> {
    let mut engines = vec![EngineChoice::Serial];
    engines.extend(a.workers.iter().map(|&w| EngineChoice::Parallel { workers: w as usize }));
    let config = BenchConfig {
        cases: a.sizes,
        engines,
        repetitions: a.reps as usize,
        seed: a.seed,
        max_iter: a.max_iter,
    };
    println!("case engine workers median_seconds atoms iterations deterministic");
    let table = benchmark_with(&config, |r| {
        println!(
            "{} {} {} {:.4} {} {} {}",
            r.case,
            r.engine.label(),
            r.engine.workers(),
            r.median_seconds,
            r.atoms_found,
            r.iterations,
            r.deterministic
        );
    })?;
    for f in table.quadratic_fits() {
        println!(
            "fit {} workers={} T={} K={}: seconds = {:.4e} + {:.4e}*P + {:.4e}*P^2 (R^2 = {:.4}, {} sizes)",
            f.engine.label(),
            f.engine.workers(),
            f.rows,
            f.atoms,
            f.coefficients[0],
            f.coefficients[1],
            f.coefficients[2],
            f.r_squared,
            f.points
        );
    }
    if let Some(path) = &a.csv {
        table.write_csv(path)?;
    }
    if let Some(path) = &a.report {
        table.write_records(path)?;
    }
    Ok(EXIT_OK)
}

fn convert(a: ConvertArgs) -> Result<i32> {
    let s = read_matrix(&a.input, a.from)?;
    write_matrix(&s, &a.output, a.to)?;
    Ok(EXIT_OK)
}
