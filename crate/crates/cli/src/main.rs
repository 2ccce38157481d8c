//! Command-line front end: parses body or matrix tuple files, runs the
//! capacity pipeline, and emits machine-readable reports with
//! reproducibility metadata (seed, input hash, oracle call counts).
//!
//! Exit codes: 0 = certified result, 2 = ran but uncertified, 3 = zero
//! mixed volume (with certificate), 64 = input or parameter error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use mixedvol::bounds::{g_factor, lambda_factor, schrijver_factor, vdw_factor};
use mixedvol::discriminant::{det_capacity_with, mixed_discriminant_polarization};
use mixedvol::geometry::Limits;
use mixedvol::io::{
    content_hash, parse_body_file_with, parse_matrix_file, DecompositionSummary, ReportEnvelope,
    RunMeta,
};
use mixedvol::mv_exact::mixed_volume_auto_with;
use mixedvol::scaling::{sinkhorn_iterate, FunctionalClass, MinkowskiFunctional};
use mixedvol::selftest;
use mixedvol::solver::{approx_mixed_volume_with, decompose_with, CapacityReport, SolveOracle};
use mixedvol::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::exit;
use std::time::Instant;

const EXIT_CERTIFIED: i32 = 0;
const EXIT_UNCERTIFIED: i32 = 2;
const EXIT_ZERO: i32 = 3;
const EXIT_INPUT: i32 = 64;

#[derive(Parser)]
#[command(
    name = "mixedvol",
    about = "Mixed volumes of convex bodies: exact oracles, certified capacity brackets, \
             scaling diagnostics, and mixed discriminants",
    version
)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum ModeArg {
    Exact,
    Mc,
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum NormalizationArg {
    /// n!-scaled derivative convention (boxes give permanents)
    Partial,
    /// volume convention: n!-scaled values divided by n!
    Classical,
}

#[derive(Args)]
struct SolveArgs {
    /// Body tuple file (JSON)
    #[arg(long)]
    input: PathBuf,
    /// Certified additive tolerance on the log objective, in (0, 1)
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Oracle mode for volume evaluations
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Samples per oracle call in mc mode (at least 1000)
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Master seed; defaults to a value derived from the input hash
    #[arg(long)]
    seed: Option<u64>,
    /// Normalization of emitted mixed-volume values
    #[arg(long, value_enum, default_value_t = NormalizationArg::Partial)]
    normalization: NormalizationArg,
    /// Solver iteration budget per decomposition block
    #[arg(long, default_value_t = 100_000)]
    budget: u64,
    /// Report path; stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Certified capacity bracket for a body tuple
    Capacity(SolveArgs),
    /// Capacity bracket plus the exact polarization value when affordable
    MixedVolume(SolveArgs),
    /// Table of certified lower-bound factors for given order and rank cap
    Bounds {
        /// Tuple arity n
        #[arg(long)]
        n: usize,
        /// Rank cap k (factors use min(i, k))
        #[arg(long)]
        k: usize,
        /// JSON output path; the table always prints to stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Scaling-iteration trajectory as CSV
    Scale {
        /// Body tuple file (JSON)
        #[arg(long)]
        input: PathBuf,
        /// Maximum iterations
        #[arg(long, default_value_t = 200)]
        iterations: usize,
        /// Convergence threshold on the max gradient gap
        #[arg(long, default_value_t = 1e-7)]
        epsilon: f64,
        /// Starting point as comma-separated positives; all-ones if omitted
        #[arg(long)]
        x0: Option<String>,
        /// CSV path; stdout when omitted
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Split a tuple into indecomposable blocks (or a zero certificate)
    Decompose {
        /// Body tuple file (JSON)
        #[arg(long)]
        input: PathBuf,
        /// Report path; stdout when omitted
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Mixed-discriminant capacity for a symmetric PSD matrix tuple
    Discriminant {
        /// Matrix tuple file (JSON)
        #[arg(long)]
        input: PathBuf,
        /// Certified additive tolerance on the log objective, in (0, 1)
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        /// Seed recorded in the report; defaults to the input hash
        #[arg(long)]
        seed: Option<u64>,
        /// Normalization of emitted discriminant values
        #[arg(long, value_enum, default_value_t = NormalizationArg::Partial)]
        normalization: NormalizationArg,
        /// Report path; stdout when omitted
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the release acceptance criteria
    Selftest {
        /// Criterion ids to run (1..=12); all when omitted
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

fn main() {
    let cli = CliArgs::parse();
    let code = match cli.command {
        Command::Capacity(a) => run_solve("capacity", a, false),
        Command::MixedVolume(a) => run_solve("mixed-volume", a, true),
        Command::Bounds { n, k, output } => run_bounds(n, k, output.as_deref()),
        Command::Scale { input, iterations, epsilon, x0, output } => {
            run_scale(&input, iterations, epsilon, x0.as_deref(), output.as_deref())
        }
        Command::Decompose { input, output } => run_decompose(&input, output.as_deref()),
        Command::Discriminant { input, epsilon, seed, normalization, output } => {
            run_discriminant(&input, epsilon, seed, normalization, output.as_deref())
        }
        Command::Selftest { only } => run_selftest(&only),
    };
    exit(code);
}

// ---------------------------------------------------------------------------
// shared plumbing

fn fail_input(msg: impl std::fmt::Display) -> i32 {
    eprintln!("input error: {msg}");
    EXIT_INPUT
}

fn fail_runtime(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_UNCERTIFIED
}

fn read_text(path: &Path) -> std::result::Result<(String, String), i32> {
    let bytes = std::fs::read(path).map_err(|e| fail_input(format!("{}: {e}", path.display())))?;
    let hash = content_hash(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| fail_input(format!("{}: not valid UTF-8", path.display())))?;
    Ok((text, hash))
}

/// Seed derived from the leading 16 hex digits of the input hash, so reruns
/// without an explicit seed are still reproducible.
fn seed_from_hash(hash: &str) -> u64 {
    u64::from_str_radix(&hash[..16], 16).unwrap_or(0)
}

fn write_out(path: Option<&Path>, text: &str) -> std::result::Result<(), i32> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| fail_input(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// n! as a double; exact for the supported arities.
fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn normalization_note(norm: NormalizationArg, n: usize, determinantal: bool) -> String {
    let object = if determinantal { "discriminant" } else { "mixed-volume" };
    match norm {
        NormalizationArg::Partial => format!(
            "{object} values use the n!-scaled derivative convention (n = {n}); \
             the ellipsoid-discriminant bracket is stated for the volume convention \
             and converted accordingly"
        ),
        NormalizationArg::Classical => format!(
            "{object} values are volume-normalized: n!-scaled values divided by {} (n = {n})",
            factorial(n)
        ),
    }
}

/// Applies the classical normalization to the value fields of a report.
fn apply_normalization(
    report: &mut CapacityReport,
    exact: &mut Option<f64>,
    norm: NormalizationArg,
    n: usize,
) {
    if norm == NormalizationArg::Classical {
        let nf = factorial(n);
        report.mv_lower /= nf;
        report.mv_upper /= nf;
        if let Some(v) = exact {
            *v /= nf;
        }
    }
}

fn report_exit(report: &CapacityReport) -> i32 {
    if report.zero_certificate.is_some() {
        EXIT_ZERO
    } else if report.certified {
        EXIT_CERTIFIED
    } else {
        EXIT_UNCERTIFIED
    }
}

/// Errors that indicate a bad input or parameter rather than a runtime
/// limitation.
fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::ParseInput(_)
            | Error::InvalidParameter(_)
            | Error::InvalidBody(_)
            | Error::DimensionMismatch { .. }
            | Error::DimensionCap { .. }
            | Error::Io(_)
            | Error::Json(_)
    )
}

fn error_exit(e: &Error) -> i32 {
    if is_input_error(e) {
        fail_input(e)
    } else {
        fail_runtime(e)
    }
}

// ---------------------------------------------------------------------------
// capacity / mixed-volume

fn run_solve(command: &str, a: SolveArgs, with_exact: bool) -> i32 {
    if !(a.epsilon > 0.0 && a.epsilon < 1.0) {
        return fail_input(format!("epsilon must lie in (0, 1), got {}", a.epsilon));
    }
    if a.mode == ModeArg::Mc && a.samples < 1000 {
        return fail_input(format!("mc mode needs at least 1000 samples, got {}", a.samples));
    }
    let (text, hash) = match read_text(&a.input) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let limits = Limits::default();
    let lt = match parse_body_file_with(&text, &limits) {
        Ok(v) => v,
        Err(e) => return fail_input(e),
    };
    let seed = a.seed.unwrap_or_else(|| seed_from_hash(&hash));
    let oracle = match a.mode {
        ModeArg::Exact => SolveOracle::Exact,
        ModeArg::Mc => SolveOracle::Mc { samples: a.samples },
    };
    let n = lt.tuple.n();
    let start = Instant::now();
    let mut report =
        match approx_mixed_volume_with(&lt.tuple, a.epsilon, oracle, seed, a.budget, &limits) {
            Ok(r) => r,
            Err(e) => return error_exit(&e),
        };
    let mut exact_value = if with_exact {
        mixed_volume_auto_with(&lt.tuple, &limits).ok().map(|r| r.value)
    } else {
        None
    };
    apply_normalization(&mut report, &mut exact_value, a.normalization, n);
    let envelope = ReportEnvelope {
        report,
        exact_value,
        meta: RunMeta {
            command: command.into(),
            input_sha256: hash,
            epsilon: a.epsilon,
            samples: if a.mode == ModeArg::Mc { a.samples } else { 0 },
            normalization: norm_name(a.normalization).into(),
            normalization_note: normalization_note(a.normalization, n, false),
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    };
    let json = match envelope.to_json() {
        Ok(j) => j,
        Err(e) => return fail_runtime(e),
    };
    if let Err(code) = write_out(a.output.as_deref(), &json) {
        return code;
    }
    report_exit(&envelope.report)
}

fn norm_name(n: NormalizationArg) -> &'static str {
    match n {
        NormalizationArg::Partial => "partial",
        NormalizationArg::Classical => "classical",
    }
}

// ---------------------------------------------------------------------------
// bounds

#[derive(Serialize)]
struct BoundsRow {
    i: usize,
    d: usize,
    lambda: f64,
}

#[derive(Serialize)]
struct BoundsTable {
    n: usize,
    k: usize,
    rows: Vec<BoundsRow>,
    factor_product: f64,
    schrijver_factor: f64,
    factorial_ratio: f64,
    g_last: f64,
}

fn run_bounds(n: usize, k: usize, output: Option<&Path>) -> i32 {
    let build = || -> Result<BoundsTable> {
        let mut rows = Vec::with_capacity(n);
        let mut product = 1.0f64;
        for i in 1..=n {
            let d = i.min(k);
            let lambda = lambda_factor(i, d)?;
            product *= lambda;
            rows.push(BoundsRow { i, d, lambda });
        }
        Ok(BoundsTable {
            n,
            k,
            rows,
            factor_product: product,
            schrijver_factor: schrijver_factor(n, k)?,
            factorial_ratio: vdw_factor(n),
            g_last: g_factor(k),
        })
    };
    let table = match build() {
        Ok(t) => t,
        Err(e) => return fail_input(e),
    };
    println!("lower-bound factors for n = {}, rank cap k = {}", table.n, table.k);
    println!("{:>4} {:>6} {:>22}", "i", "d(i)", "lambda(i, d(i))");
    for row in &table.rows {
        println!("{:>4} {:>6} {:>22.15}", row.i, row.d, row.lambda);
    }
    println!("factor product:      {:.15}", table.factor_product);
    println!("schrijver factor:    {:.15}", table.schrijver_factor);
    println!("factorial ratio:     {:.15}", table.factorial_ratio);
    if let Some(path) = output {
        let json = match serde_json::to_string_pretty(&table) {
            Ok(j) => j,
            Err(e) => return fail_runtime(e),
        };
        if std::fs::write(path, json).is_err() {
            return fail_input(format!("cannot write {}", path.display()));
        }
    }
    EXIT_CERTIFIED
}

// ---------------------------------------------------------------------------
// scale

fn run_scale(
    input: &Path,
    iterations: usize,
    epsilon: f64,
    x0: Option<&str>,
    output: Option<&Path>,
) -> i32 {
    let (text, _) = match read_text(input) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let limits = Limits::default();
    let lt = match parse_body_file_with(&text, &limits) {
        Ok(v) => v,
        Err(e) => return fail_input(e),
    };
    let n = lt.tuple.n();
    let start: Vec<f64> = match x0 {
        None => vec![1.0; n],
        Some(s) => {
            let parsed: std::result::Result<Vec<f64>, _> =
                s.split(',').map(|p| p.trim().parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == n && v.iter().all(|&c| c > 0.0) => v,
                Ok(v) => return fail_input(format!("x0 needs {n} positive entries, got {:?}", v)),
                Err(e) => return fail_input(format!("x0: {e}")),
            }
        }
    };
    let f = MinkowskiFunctional::with_limits(&lt.tuple, limits);
    let traj = match sinkhorn_iterate(&f, FunctionalClass::RootConcave, &start, iterations, epsilon)
    {
        Ok(t) => t,
        Err(e) => return error_exit(&e),
    };
    let converged = traj.converged;
    if let Err(code) = write_out(output, traj.to_csv().trim_end()) {
        return code;
    }
    if converged {
        EXIT_CERTIFIED
    } else {
        EXIT_UNCERTIFIED
    }
}

// ---------------------------------------------------------------------------
// decompose

#[derive(Serialize)]
struct DecomposeEnvelope {
    decomposition: DecompositionSummary,
    input_sha256: String,
}

fn run_decompose(input: &Path, output: Option<&Path>) -> i32 {
    let (text, hash) = match read_text(input) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let limits = Limits::default();
    let lt = match parse_body_file_with(&text, &limits) {
        Ok(v) => v,
        Err(e) => return fail_input(e),
    };
    let dec = match decompose_with(&lt.tuple, &limits) {
        Ok(d) => d,
        Err(e) => return error_exit(&e),
    };
    let envelope = DecomposeEnvelope { decomposition: (&dec).into(), input_sha256: hash };
    let json = match serde_json::to_string_pretty(&envelope) {
        Ok(j) => j,
        Err(e) => return fail_runtime(e),
    };
    if let Err(code) = write_out(output, &json) {
        return code;
    }
    if dec.zero_certificate.is_some() {
        EXIT_ZERO
    } else {
        EXIT_CERTIFIED
    }
}

// ---------------------------------------------------------------------------
// discriminant

fn run_discriminant(
    input: &Path,
    epsilon: f64,
    seed: Option<u64>,
    normalization: NormalizationArg,
    output: Option<&Path>,
) -> i32 {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return fail_input(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    let (text, hash) = match read_text(input) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let tuple = match parse_matrix_file(&text) {
        Ok(t) => t,
        Err(e) => return fail_input(e),
    };
    let n = tuple.n();
    let seed = seed.unwrap_or_else(|| seed_from_hash(&hash));
    let start = Instant::now();
    let mut exact_value = mixed_discriminant_polarization(&tuple).ok();
    let mut report = match det_capacity_with(&tuple, epsilon, 100_000, seed) {
        Ok(r) => r,
        Err(Error::NotIndecomposable { witness }) => zero_matrix_report(n, seed, witness),
        Err(e) => return error_exit(&e),
    };
    apply_normalization(&mut report, &mut exact_value, normalization, n);
    let envelope = ReportEnvelope {
        report,
        exact_value,
        meta: RunMeta {
            command: "discriminant".into(),
            input_sha256: hash,
            epsilon,
            samples: 0,
            normalization: norm_name(normalization).into(),
            normalization_note: normalization_note(normalization, n, true),
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    };
    let json = match envelope.to_json() {
        Ok(j) => j,
        Err(e) => return fail_runtime(e),
    };
    if let Err(code) = write_out(output, &json) {
        return code;
    }
    report_exit(&envelope.report)
}

/// A decomposable matrix tuple has mixed discriminant exactly zero; the
/// witness subset has rank(sum) <= |subset|.
fn zero_matrix_report(n: usize, seed: u64, witness: Vec<usize>) -> CapacityReport {
    CapacityReport {
        cap_estimate: 0.0,
        minimizer_y: vec![0.0; n],
        additive_gap: 0.0,
        mv_lower: 0.0,
        mv_upper: 0.0,
        factors: Vec::new(),
        oracle_mode: "exact".into(),
        iterations: 0,
        oracle_calls: 0,
        seed,
        certified: true,
        zero_certificate: Some(witness),
    }
}

// ---------------------------------------------------------------------------
// selftest

fn run_selftest(only: &[usize]) -> i32 {
    let all = selftest::run_all_named();
    let results: Vec<_> = if only.is_empty() {
        all.into_iter().map(|(_, f)| f()).collect()
    } else {
        let chosen: Vec<_> = all.into_iter().filter(|(id, _)| only.contains(id)).collect();
        if chosen.is_empty() {
            return fail_input(format!("no criteria match ids {only:?}"));
        }
        chosen.into_iter().map(|(_, f)| f()).collect()
    };
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        println!("all {} selected criteria passed", results.len());
        EXIT_CERTIFIED
    } else {
        eprintln!("{failed} of {} criteria failed", results.len());
        EXIT_UNCERTIFIED
    }
}
