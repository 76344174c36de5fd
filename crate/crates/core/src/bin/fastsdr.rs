use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fastsdr::bench::{run_bench, BenchGrid};
use fastsdr::config::{EvalConfig, MetricSet, Precision, Solver, DEFAULT_CGD_ITERS, DEFAULT_FILTER_LENGTH};
use fastsdr::report::{InputSummary, Report};
use fastsdr::selftest::{run_selftest, SelftestOptions};
use fastsdr::wav::read_many;
use fastsdr::{bss_eval, Error};

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_SOLVER: u8 = 4;

/// Fast bss_eval source separation metrics (SDR, SIR, SAR).
#[derive(Debug, Parser)]
#[command(name = "fastsdr", version)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, env = "FASTSDR_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate estimate WAV files against reference WAV files.
    Eval(EvalArgs),
    /// Time the solvers on synthetic signals.
    Bench(BenchArgs),
    /// Check the fast path against the projection oracle.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Distortion filter length in taps.
    #[arg(long, default_value_t = DEFAULT_FILTER_LENGTH)]
    filter_length: usize,

    /// direct, cgd or levinson.
    #[arg(long, default_value_t = Solver::Cgd)]
    solver: Solver,

    /// Conjugate gradient iterations per system.
    #[arg(long, default_value_t = DEFAULT_CGD_ITERS)]
    iters: usize,

    /// Early-stop relative residual for conjugate gradient (0 runs all iterations).
    #[arg(long, default_value_t = 0.0)]
    tol: f64,

    /// f32 or f64.
    #[arg(long, default_value_t = Precision::Double)]
    precision: Precision,

    /// Comma-separated subset of sdr,sir,sar.
    #[arg(long, default_value = "sdr,sir,sar")]
    metrics: MetricSet,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Reference WAV files; channels are stacked in argument order.
    #[arg(short, long = "reference", num_args = 1.., required = true)]
    references: Vec<PathBuf>,

    /// Estimate WAV files; channels are stacked in argument order.
    #[arg(short, long = "estimate", num_args = 1.., required = true)]
    estimates: Vec<PathBuf>,

    #[command(flatten)]
    solver: SolverArgs,

    /// Do not resolve the reference to estimate assignment.
    #[arg(long)]
    no_permutation: bool,

    /// Clamp applied to cosine metrics before the dB map.
    #[arg(long)]
    clamp_epsilon: Option<f64>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    output: Format,

    /// Write the document here instead of stdout.
    #[arg(short = 'o', long)]
    output_path: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Channel counts; pass the flag without values for an empty grid.
    #[arg(long, num_args = 0.., value_delimiter = ',', default_values_t = [2])]
    channels: Vec<usize>,

    /// Signal durations in seconds.
    #[arg(long, num_args = 0.., value_delimiter = ',', default_values_t = [5.0])]
    seconds: Vec<f64>,

    #[arg(long, num_args = 0.., value_delimiter = ',', default_values_t = [512, 1024])]
    filter_lengths: Vec<usize>,

    #[arg(long, num_args = 0.., value_delimiter = ',', default_values_t = [Solver::Cgd, Solver::Direct])]
    solvers: Vec<Solver>,

    #[arg(long, default_value = "sdr,sir,sar")]
    metrics: MetricSet,

    #[arg(long, default_value_t = DEFAULT_CGD_ITERS)]
    iters: usize,

    #[arg(long, default_value_t = 16_000)]
    sample_rate: u32,

    /// Timed repetitions per cell (after one discarded warm-up).
    #[arg(long, default_value_t = 10)]
    reps: usize,

    /// Evaluations per repetition.
    #[arg(long, default_value_t = 10)]
    batch: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, value_enum, default_value_t = TableFormat::Text)]
    output: TableFormat,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 200)]
    instances: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Accepted fast-vs-oracle deviation in dB.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,

    /// Accepted relative error of the preconditioner round trips.
    #[arg(long, default_value_t = 1e-10)]
    roundtrip_tolerance: f64,

    /// Set every tolerance to zero so the checks are expected to fail.
    #[arg(long, hide = true)]
    zero_tolerance: bool,

    #[arg(long, value_enum, default_value_t = TableFormat::Text)]
    output: TableFormat,
}

fn exit_code(err: &Error) -> u8 {
    if err.is_validation() {
        EXIT_VALIDATION
    } else if err.is_solver() {
        EXIT_SOLVER
    } else {
        EXIT_IO
    }
}

fn report_error(err: &Error) -> ExitCode {
    let code = exit_code(err);
    let doc = json!({
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
            "exit_code": code,
        }
    });
    eprintln!("{doc}");
    ExitCode::from(code)
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<ExitCode, Error> {
    let refs = read_many(&args.references)?;
    let ests = read_many(&args.estimates)?;
    if refs.sample_rate() != ests.sample_rate() {
        return Err(Error::SampleRateMismatch {
            expected: refs.sample_rate(),
            actual: ests.sample_rate(),
        });
    }
    let s = &args.solver;
    let cfg = EvalConfig {
        filter_length: s.filter_length,
        solver: s.solver,
        cgd_iters: s.iters,
        cgd_tol: s.tol,
        precision: s.precision,
        metrics: s.metrics,
        resolve_permutation: !args.no_permutation,
        clamp_epsilon: args.clamp_epsilon,
    };
    let result = bss_eval(&refs, &ests, &cfg)?;
    let input = InputSummary {
        references: refs.num_channels(),
        estimates: ests.num_channels(),
        samples: refs.len(),
        sample_rate: refs.sample_rate(),
    };
    let report = Report::new(&cfg, input, &result);
    let text = match args.output {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    emit(&text, args.output_path.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn bench(args: &BenchArgs) -> Result<ExitCode, Error> {
    let grid = BenchGrid {
        channels: args.channels.clone(),
        seconds: args.seconds.clone(),
        filter_lengths: args.filter_lengths.clone(),
        solvers: args.solvers.clone(),
        metrics: args.metrics,
        sample_rate: args.sample_rate,
        reps: args.reps,
        batch: args.batch,
        cgd_iters: args.iters,
        seed: args.seed,
    };
    let table = run_bench(&grid, |row| {
        eprintln!(
            "channels={} seconds={} L={} solver={} mean={:.2}ms",
            row.channels, row.seconds, row.filter_length, row.solver, row.mean_ms
        )
    })?;
    let text = match args.output {
        TableFormat::Text => table.to_string(),
        TableFormat::Json => serde_json::to_string_pretty(&table).expect("serializable") + "\n",
    };
    emit(&text, None)?;
    Ok(ExitCode::SUCCESS)
}

fn selftest(args: &SelftestArgs) -> Result<ExitCode, Error> {
    let zero = |t: f64| if args.zero_tolerance { 0.0 } else { t };
    let opts = SelftestOptions {
        instances: args.instances,
        seed: args.seed,
        equivalence_tol_db: zero(args.tolerance),
        roundtrip_tol: zero(args.roundtrip_tolerance),
    };
    let report = run_selftest(&opts)?;
    let text = match args.output {
        TableFormat::Text => report.to_string(),
        TableFormat::Json => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
    };
    emit(&text, None)?;
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED_CHECK)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report_error(&Error::InvalidConfig(format!("thread pool: {e}")));
        }
    }
    let outcome = match &cli.command {
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
        Command::Selftest(a) => selftest(a),
    };
    outcome.unwrap_or_else(|e| report_error(&e))
}
