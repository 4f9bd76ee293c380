//! The `sdrvm` command line: experiment sweeps, single-image denoising and
//! the identity self-check.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on bad arguments.

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::experiments::{
    load_housing, parse_methods, psnr, read_pgm, run_block_sweep, run_cs_sweep, run_housing,
    salt_pepper, write_pgm, BlockConfig, BlockStructure, CsConfig, Denoiser, Method, PatchModel,
    ResultTable,
};
use crate::selfcheck::{run_selfcheck, Identity};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "sdrvm", version, about = "Sparse Bayesian recovery under sparse and dense noise")]
pub struct Cli {
    /// More progress output on standard error (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// NMSE against measurement rate for componentwise-sparse signals.
    CsSweep(CsSweepArgs),
    /// NMSE against measurement rate for block-sparse signals.
    BlockSweep(BlockSweepArgs),
    /// Median house-price prediction error and fit time.
    Housing(HousingArgs),
    /// Salt-and-pepper corruption followed by denoising of one image.
    Denoise(DenoiseArgs),
    /// Numerical identity checks on random small problems.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Seed for every random draw.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Result table path (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads for trials; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Also write wall-clock metrics, which differ between runs.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct CsSweepArgs {
    /// Signal dimension.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Measurement rates m/n as start:end:step.
    #[arg(long, default_value = "0.3:0.9:0.1")]
    pub mn: String,
    /// Fraction of measurements hit by outliers.
    #[arg(long, default_value_t = 0.05)]
    pub outliers: f64,
    #[arg(long, default_value_t = 20.0)]
    pub sdnr_db: f64,
    /// Matrices x signals per point.
    #[arg(long, default_value = "20x20")]
    pub trials: String,
    /// Nonzeros in the signal.
    #[arg(long, default_value_t = 10)]
    pub k_signal: usize,
    /// Comma-separated methods.
    #[arg(long, default_value = "rvm,rbrvm,sdrvm,sdrvm-sd")]
    pub methods: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StructureArg {
    Known,
    Unknown,
}

#[derive(Debug, Args)]
pub struct BlockSweepArgs {
    #[arg(long, value_enum, default_value_t = StructureArg::Known)]
    pub structure: StructureArg,
    #[arg(long, default_value_t = 5)]
    pub block_size: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Nonzero signal blocks.
    #[arg(long, default_value_t = 3)]
    pub active_blocks: usize,
    /// Fraction of noise blocks carrying outliers.
    #[arg(long, default_value_t = 0.05)]
    pub noise_blocks: f64,
    #[arg(long, default_value = "0.3:0.9:0.1")]
    pub mn: String,
    #[arg(long, default_value_t = 20.0)]
    pub sdnr_db: f64,
    #[arg(long, default_value = "20x20")]
    pub trials: String,
    /// Comma-separated methods; the default depends on the structure.
    #[arg(long)]
    pub methods: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct HousingArgs {
    /// 14-column CSV: 13 features, then the price.
    #[arg(long)]
    pub csv: PathBuf,
    /// Training fraction.
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value = "rvm,rbrvm,sdrvm,sdrvm-sd")]
    pub methods: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Input PGM (P2 or P5).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Fraction of pixels to corrupt before denoising.
    #[arg(long, default_value_t = 0.2)]
    pub rho: f64,
    /// median, rvm, rbrvm, sdrvm or sdrvm-sd.
    #[arg(long, default_value = "sdrvm-sd")]
    pub method: String,
    /// Denoised image, written as P5.
    #[arg(long)]
    pub out: PathBuf,
    /// Clean reference; prints the PSNR of the result when given.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// Also save the corrupted input.
    #[arg(long)]
    pub noisy_out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Random instances per identity.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Deliberately break one identity (tests the checker).
    #[arg(long)]
    pub perturb: Option<String>,
}

/// Failure of a command, mapped to its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidBlockLayout(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

/// Parses `start:end:step` into the listed points, inclusive of `end`.
pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("range '{text}' must be start:end:step"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, end, step) = match parts[..] {
        [v] => (v, v, 1.0),
        [s, e, st] => (s, e, st),
        _ => return Err(bad()),
    };
    if !(start.is_finite() && end.is_finite() && step.is_finite()) {
        return Err(bad());
    }
    if !(start > 0.0) || start > end || !(step > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "range '{text}' needs 0 < start <= end and step > 0"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count)
        .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

/// Parses `AxB` (or a single count `A`, meaning `A x 1`).
pub fn parse_trials(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidConfig(format!("trials '{text}' must look like 20x20"));
    let parts: Vec<usize> = text
        .split(['x', 'X'])
        .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (a, b) = match parts[..] {
        [a] => (a, 1),
        [a, b] => (a, b),
        _ => return Err(bad()),
    };
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> std::result::Result<T, Failure> {
    if jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    pool.install(f).map_err(Failure::from)
}

fn emit(table: &ResultTable, out: &Output) -> std::result::Result<(), Failure> {
    let text = match out.format {
        Format::Csv => table.to_csv(out.timings),
        Format::Json => table.to_json(out.timings)? + "\n",
    };
    match &out.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn cs_sweep(a: &CsSweepArgs) -> std::result::Result<(), Failure> {
    let rates = parse_range(&a.mn)?;
    let (tm, ts) = parse_trials(&a.trials)?;
    let cfg = CsConfig {
        n: a.n,
        m: a.n,
        k_signal: a.k_signal,
        k_noise: 0,
        sdnr_db: a.sdnr_db,
        trials_matrices: tm,
        trials_signals: ts,
        seed: a.output.seed,
        methods: parse_methods(&a.methods)?,
    };
    let table = with_jobs(a.output.jobs, || run_cs_sweep(&cfg, &rates, a.outliers))?;
    emit(&table, &a.output)
}

fn block_sweep(a: &BlockSweepArgs) -> std::result::Result<(), Failure> {
    let rates = parse_range(&a.mn)?;
    let (tm, ts) = parse_trials(&a.trials)?;
    let structure = match a.structure {
        StructureArg::Known => BlockStructure::Known,
        StructureArg::Unknown => BlockStructure::Unknown,
    };
    let methods = match &a.methods {
        Some(list) => parse_methods(list)?,
        None => {
            let block = match structure {
                BlockStructure::Known => Method::SdRvmBlock,
                BlockStructure::Unknown => Method::SdRvmOverlap,
            };
            vec![block, Method::SdRvm, Method::SdRvmSparseDense, Method::Rvm, Method::RbRvm]
        }
    };
    if structure == BlockStructure::Unknown && methods.contains(&Method::SdRvmBlock) {
        return Err(Failure::Usage("sdrvm-block needs --structure known".into()));
    }
    let cfg = BlockConfig {
        n: a.n,
        block_size: a.block_size,
        active_blocks: a.active_blocks,
        noise_block_fraction: a.noise_blocks,
        sdnr_db: a.sdnr_db,
        trials_matrices: tm,
        trials_signals: ts,
        seed: a.output.seed,
        structure,
        methods,
    };
    cfg.check()?;
    let table = with_jobs(a.output.jobs, || run_block_sweep(&cfg, &rates))?;
    emit(&table, &a.output)
}

fn housing(a: &HousingArgs) -> std::result::Result<(), Failure> {
    let methods = parse_methods(&a.methods)?;
    if !(a.rho > 0.0 && a.rho < 1.0) {
        return Err(Failure::Usage(format!("--rho must lie in (0, 1), got {}", a.rho)));
    }
    let data = load_housing(&a.csv)?;
    let table = with_jobs(a.output.jobs, || run_housing(&data, a.rho, a.trials, a.output.seed, &methods))?;
    emit(&table, &a.output)
}

fn denoise(a: &DenoiseArgs) -> std::result::Result<(), Failure> {
    let denoiser: Denoiser = a.method.parse()?;
    if !(0.0..=1.0).contains(&a.rho) {
        return Err(Failure::Usage(format!("--rho must lie in [0, 1], got {}", a.rho)));
    }
    let clean = read_pgm(&a.input)?;
    let reference = a.reference.as_ref().map(|p| read_pgm(p)).transpose()?;
    let noisy = salt_pepper(&clean, a.rho, a.seed)?;
    if let Some(p) = &a.noisy_out {
        write_pgm(p, &noisy)?;
    }
    let model = PatchModel::default();
    let out = with_jobs(a.jobs, || denoiser.apply(&noisy, &model))?;
    write_pgm(&a.out, &out)?;
    if let Some(r) = reference {
        println!("PSNR {denoiser}: {:.4} dB", psnr(&r, &out)?);
    }
    Ok(())
}

fn selfcheck(a: &SelfcheckArgs) -> std::result::Result<(), Failure> {
    let perturb = a.perturb.as_deref().map(str::parse::<Identity>).transpose()?;
    let outcomes = run_selfcheck(a.trials, a.seed, perturb)?;
    for o in &outcomes {
        println!(
            "{:<22} max error {:.3e} (tolerance {:.0e}, {} instances) {}",
            o.identity.name(),
            o.max_error,
            o.tolerance,
            o.instances,
            if o.passed() { "ok" } else { "FAILED" }
        );
    }
    match outcomes.iter().find(|o| !o.passed()) {
        Some(o) => Err(Failure::Runtime(format!("identity {} failed", o.identity))),
        None => Ok(()),
    }
}

/// Runs an already parsed command line.
pub fn execute(cli: &Cli) -> std::result::Result<(), Failure> {
    match &cli.command {
        Command::CsSweep(a) => cs_sweep(a),
        Command::BlockSweep(a) => block_sweep(a),
        Command::Housing(a) => housing(a),
        Command::Denoise(a) => denoise(a),
        Command::Selfcheck(a) => selfcheck(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Runtime(msg)) = &f;
            eprintln!("error: {msg}");
            f.code()
        }
    }
}
