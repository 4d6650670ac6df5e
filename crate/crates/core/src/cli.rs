//! Command-line front end.
//!
//! Exit codes: 0 converged, 2 restart budget exhausted, 1 usage or I/O error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{ArgGroup, Parser, ValueEnum};
use serde::Serialize;

use crate::bidiag::Reorth;
use crate::error::{Error, Result};
use crate::matrix_io::{make_clustered_diag, make_illcond_diag, read_matrix_market, SparseMatrix};
use crate::solver::{solve, Algorithm, SolverConfig, SolverResult, Target};

pub const TRACE_HEADER: &str =
    "restart,triplet_index,rho,residual,shift_min,shift_max,n_replaced_shifts,a_norm_est,flags";

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Irrhlb,
    Irhlb,
    Irlb,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SigmaArg {
    #[value(name = "SS")]
    Ss,
    #[value(name = "LS")]
    Ls,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReorthArg {
    Both,
    #[value(name = "q_only")]
    QOnly,
}

#[derive(Debug, Parser)]
#[command(name = "rhlb", about = "Smallest singular triplets of a sparse matrix", version)]
#[command(group(ArgGroup::new("source").required(true).args(["matrix", "generate"])))]
struct Args {
    /// Matrix Market coordinate file
    #[arg(long, value_name = "PATH")]
    matrix: Option<PathBuf>,
    /// Built-in test matrix: clustered:S or illcond:S
    #[arg(long, value_name = "NAME:PARAM")]
    generate: Option<String>,
    #[arg(long, value_enum, default_value = "irrhlb")]
    algorithm: AlgorithmArg,
    /// Number of wanted triplets
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Extra approximations kept at each restart
    #[arg(long, default_value_t = 3)]
    adjust: usize,
    /// Bidiagonalization steps per cycle
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 300)]
    maxit: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, value_enum, default_value = "SS")]
    sigma: SigmaArg,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value = "both")]
    reorth: ReorthArg,
    /// Per-restart CSV trace
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// JSON result (stdout when absent)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Include singular vectors in the result
    #[arg(long)]
    emit_vectors: bool,
}

impl Args {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            k: self.k,
            adjust: self.adjust,
            m: self.m,
            maxit: self.maxit,
            tol: self.tol,
            sigma: match self.sigma {
                SigmaArg::Ss => Target::Smallest,
                SigmaArg::Ls => Target::Largest,
            },
            seed: self.seed,
            algorithm: match self.algorithm {
                AlgorithmArg::Irrhlb => Algorithm::Irrhlb,
                AlgorithmArg::Irhlb => Algorithm::Irhlb,
                AlgorithmArg::Irlb => Algorithm::Irlb,
            },
            reorth: match self.reorth {
                ReorthArg::Both => Reorth::Both,
                ReorthArg::QOnly => Reorth::QOnly,
            },
        }
    }
}

/// Parse `clustered:S` or `illcond:S`.
pub fn generate(spec: &str) -> Result<SparseMatrix> {
    let (name, param) = spec
        .split_once(':')
        .ok_or_else(|| Error::InvalidGenerator(format!("expected NAME:PARAM, got {spec:?}")))?;
    let s: u32 = param
        .parse()
        .map_err(|_| Error::InvalidGenerator(format!("bad parameter {param:?}")))?;
    match name {
        "clustered" => make_clustered_diag(s),
        "illcond" => make_illcond_diag(s),
        _ => Err(Error::InvalidGenerator(format!("unknown generator {name:?}"))),
    }
}

#[derive(Serialize)]
struct TripletRecord<'a> {
    value: f64,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    left: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    right: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct Summary<'a> {
    converged: bool,
    restarts_used: usize,
    matvec_count: usize,
    matvec_transpose_count: usize,
    a_norm_est: f64,
    nrows: usize,
    ncols: usize,
    config: &'a SolverConfig,
    triplets: Vec<TripletRecord<'a>>,
}

/// Write the trace in long form: one row per restart and wanted triplet.
pub fn write_trace<W: Write>(result: &SolverResult, mut w: W) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for rec in &result.trace.records {
        let (smin, smax) = if rec.shifts.is_empty() {
            (String::new(), String::new())
        } else {
            let lo = rec.shifts.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = rec.shifts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (format!("{lo:e}"), format!("{hi:e}"))
        };
        let replaced = rec
            .shift_kinds
            .iter()
            .filter(|k| {
                matches!(k, crate::restart::ShiftKind::ReplacedByMax | crate::restart::ShiftKind::ReplacedByZero)
            })
            .count();
        let flags: Vec<&str> = rec.flags.iter().map(|f| f.as_str()).collect();
        for (i, (rho, res)) in rec.rhos.iter().zip(&rec.residuals).enumerate() {
            writeln!(
                w,
                "{},{},{:e},{:e},{},{},{},{:e},{}",
                rec.restart,
                i + 1,
                rho,
                res,
                smin,
                smax,
                replaced,
                rec.a_norm_est,
                flags.join(";")
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn load(args: &Args) -> Result<SparseMatrix> {
    match (&args.matrix, &args.generate) {
        (Some(path), _) => read_matrix_market(BufReader::new(File::open(path)?)),
        (None, Some(spec)) => generate(spec),
        (None, None) => Err(Error::InvalidConfig("no matrix source".into())),
    }
}

fn execute(args: &Args, stdout: &mut dyn Write) -> Result<bool> {
    let a = load(args)?;
    let config = args.config();
    let result = solve(&a, &config)?;

    if let Some(path) = &args.trace {
        write_trace(&result, BufWriter::new(File::create(path)?))?;
    }
    let summary = Summary {
        converged: result.converged,
        restarts_used: result.restarts_used,
        matvec_count: result.matvec_count,
        matvec_transpose_count: result.matvec_transpose_count,
        a_norm_est: result.a_norm_est,
        nrows: a.nrows(),
        ncols: a.ncols(),
        config: &config,
        triplets: result
            .triplets
            .iter()
            .map(|t| TripletRecord {
                value: t.value,
                residual: t.residual,
                left: args.emit_vectors.then_some(t.left.as_slice()),
                right: args.emit_vectors.then_some(t.right.as_slice()),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.into()))?;
    match &args.out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            writeln!(f, "{json}")?;
            f.flush()?;
        }
        None => writeln!(stdout, "{json}")?,
    }
    Ok(result.converged)
}

/// Run with explicit output streams; returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match execute(&args, stdout) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
