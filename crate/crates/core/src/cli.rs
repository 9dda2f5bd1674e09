//! `tarst` command-line interface.
//!
//! Exit codes: 0 success, 1 usage, 2 parse, 3 numeric failure, 4 I/O.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{
    log_grid, run_pattern1, run_pattern2, summarize_records, write_csv, write_matrix, CellSummary, Method,
    OutlierMode, Pattern1Config, Pattern2Config, RulePolicy, SolverSettings, TrialRecord,
};
use crate::decomp::{tarst_with, HooiOptions, Shrink, TarstOptions};
use crate::error::Error;
use crate::svht::{lambda_star, mp_median, omega, AspectRatio, ThresholdRule};
use crate::tensor::Shape;
use crate::textio::{read_tensor, write_tensor};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "tarst", version, about = "Rank-free Tucker denoising with optimal hard thresholds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Denoise a tensor file.
    Denoise(DenoiseArgs),
    /// Print lambda*(beta), the Marchenko-Pastur median and omega(beta).
    Thresholds(ThresholdArgs),
    /// Gaussian-noise benchmark sweep.
    #[command(name = "bench-p1")]
    BenchP1(BenchP1Args),
    /// Outlier-robustness benchmark grid.
    #[command(name = "bench-p2")]
    BenchP2(BenchP2Args),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ShrinkArg {
    Hard,
    Soft,
}

impl From<ShrinkArg> for Shrink {
    fn from(s: ShrinkArg) -> Self {
        match s {
            ShrinkArg::Hard => Shrink::Hard,
            ShrinkArg::Soft => Shrink::Soft,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutlierModeArg {
    Multiply,
    ScaledMean,
}

#[derive(Debug, Args)]
struct DenoiseArgs {
    /// Input tensor in text format.
    #[arg(long, short)]
    input: PathBuf,
    /// Where to write the denoised tensor.
    #[arg(long, short)]
    output: PathBuf,
    /// Known noise standard deviation.
    #[arg(long, conflicts_with = "median")]
    sigma: Option<f64>,
    /// Estimate the noise level from the median singular value (default).
    #[arg(long)]
    median: bool,
    #[arg(long, value_enum, default_value = "hard")]
    shrink: ShrinkArg,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Aspect ratio in (0, 1].
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Tensor extents, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,10,10")]
    shape: Vec<usize>,
    /// Ground-truth Tucker ranks (default 3 per mode, 5 when all extents >= 50).
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    /// Ranks given to HOSVD/HOOI (default: ground-truth ranks + 1 for the mean offset).
    #[arg(long, value_delimiter = ',')]
    fit_ranks: Option<Vec<usize>>,
    #[arg(long, default_value_t = 10.0)]
    mean: f64,
    #[arg(long, default_value_t = 2.0)]
    std: f64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Subset of baseline,hosvd,hooi,tarst.
    #[arg(long, value_delimiter = ',', default_value = "baseline,hosvd,hooi,tarst")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    sigma_min: f64,
    #[arg(long, default_value_t = 10.0)]
    sigma_max: f64,
    /// Number of log-spaced noise levels.
    #[arg(long)]
    sigma_points: Option<usize>,
    /// Give TARST the injected noise level instead of the median estimate.
    #[arg(long)]
    sigma_known: bool,
    #[arg(long, value_enum, default_value = "hard")]
    shrink: ShrinkArg,
    #[arg(long, default_value_t = 1e-8)]
    hooi_tol: f64,
    #[arg(long, default_value_t = 50)]
    hooi_max_iter: usize,
    /// CSV output path.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Optional matrix of mean RRSE (rows: conditions, columns: sigma).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Write wall_time_ms as 0 so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct BenchP1Args {
    #[command(flatten)]
    common: BenchArgs,
}

#[derive(Debug, Args)]
struct BenchP2Args {
    #[command(flatten)]
    common: BenchArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.25,0.5")]
    ratios: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "10,25,50,100")]
    scales: Vec<f64>,
    #[arg(long, value_enum, default_value = "multiply")]
    outlier_mode: OutlierModeArg,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Io { .. } | Error::Csv { .. } => EXIT_IO,
        Error::InvalidConfig(_) | Error::AspectRatio(_) | Error::InvalidSigma(_) | Error::InvalidShape(_) => {
            EXIT_USAGE
        }
        _ => EXIT_NUMERIC,
    }
}

/// Runs the CLI with `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Denoise(a) => cmd_denoise(a, out, err),
        Command::Thresholds(a) => cmd_thresholds(a, out),
        Command::BenchP1(a) => cmd_bench_p1(a, out, err),
        Command::BenchP2(a) => cmd_bench_p2(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_denoise(a: DenoiseArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    let rule = match a.sigma {
        Some(s) => ThresholdRule::known_sigma(s)?,
        None => ThresholdRule::MedianBased,
    };
    let y = read_tensor(&a.input)?;
    let report = tarst_with(&y, &TarstOptions { rule, shrink: a.shrink.into() })?;
    write_tensor(&a.output, &report.estimate()?)?;
    for (k, (tau, rank)) in report.thresholds.iter().zip(&report.estimated_ranks).enumerate() {
        let _ = writeln!(out, "mode {}: tau={tau:.6} rank={rank}", k + 1);
    }
    if report.degenerate() {
        let _ = writeln!(
            err,
            "warning: no singular value survived thresholding in some mode; wrote the zero tensor"
        );
    }
    Ok(())
}

fn cmd_thresholds(a: ThresholdArgs, out: &mut dyn Write) -> Result<(), Error> {
    let beta = AspectRatio::new(a.beta)?;
    let _ = writeln!(
        out,
        "lambda_star={:.6} mp_median={:.6} omega={:.6}",
        lambda_star(beta),
        mp_median(beta)?,
        omega(beta)?
    );
    Ok(())
}

struct Prepared {
    shape: Shape,
    ranks: Vec<usize>,
    sigma_grid: Vec<f64>,
    solver: SolverSettings,
}

fn prepare(a: &BenchArgs, default_points: usize) -> Result<Prepared, Error> {
    let shape = Shape::new(a.shape.clone())?;
    let ranks = a
        .ranks
        .clone()
        .unwrap_or_else(|| Pattern1Config::default_ranks(&shape));
    if !(a.sigma_min > 0.0 && a.sigma_max >= a.sigma_min) {
        return Err(Error::InvalidConfig(format!(
            "invalid sigma range [{}, {}]",
            a.sigma_min, a.sigma_max
        )));
    }
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    let solver = SolverSettings {
        methods,
        fit_ranks: a.fit_ranks.clone(),
        tarst_rule: if a.sigma_known {
            RulePolicy::KnownSigma
        } else {
            RulePolicy::MedianBased
        },
        shrink: a.shrink.into(),
        hooi: HooiOptions {
            tol: a.hooi_tol,
            max_iter: a.hooi_max_iter,
        },
        record_timing: !a.no_timing,
    };
    Ok(Prepared {
        shape,
        ranks,
        sigma_grid: log_grid(a.sigma_min, a.sigma_max, a.sigma_points.unwrap_or(default_points)),
        solver,
    })
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, Error> {
    let n = match std::env::var("TARST_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidConfig(format!("TARST_THREADS={v:?} is not a count")))?,
        Err(_) => 0,
    };
    if n == 0 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R, Error> {
    Ok(match thread_pool()? {
        Some(pool) => pool.install(f),
        None => f(),
    })
}

fn emit(
    records: &[TrialRecord],
    a: &BenchArgs,
    default_csv: &str,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let csv_path = a.output.clone().unwrap_or_else(|| PathBuf::from(default_csv));
    write_csv(records, &csv_path)?;
    let summaries = summarize_records(records)?;
    if let Some(p) = &a.matrix {
        write_matrix(&summaries, p)?;
    }
    print_summary(&summaries, out);
    let _ = writeln!(out, "wrote {} records to {}", records.len(), csv_path.display());
    Ok(())
}

fn print_summary(summaries: &[CellSummary], out: &mut dyn Write) {
    let mut current: Option<(u64, Option<u64>, Option<u64>)> = None;
    let mut line = String::new();
    for s in summaries {
        let key = (
            s.sigma.to_bits(),
            s.outlier_ratio.map(f64::to_bits),
            s.outlier_scale.map(f64::to_bits),
        );
        if current != Some(key) {
            if !line.is_empty() {
                let _ = writeln!(out, "{line}");
            }
            current = Some(key);
            line = format!("sigma={:.4}", s.sigma);
            if let (Some(r), Some(c)) = (s.outlier_ratio, s.outlier_scale) {
                line.push_str(&format!(" ratio={r} scale={c}"));
            }
        }
        line.push_str(&format!(" {}={:.4e}±{:.1e}", s.method, s.stat.mean, s.stat.half_width()));
    }
    if !line.is_empty() {
        let _ = writeln!(out, "{line}");
    }
}

fn cmd_bench_p1(a: BenchP1Args, out: &mut dyn Write, _err: &mut dyn Write) -> Result<(), Error> {
    let p = prepare(&a.common, 20)?;
    let cfg = Pattern1Config {
        shape: p.shape,
        true_mean: a.common.mean,
        true_std: a.common.std,
        true_ranks: p.ranks,
        sigma_grid: p.sigma_grid,
        reps: a.common.reps,
        seed: a.common.seed,
        solver: p.solver,
    };
    let records = with_pool(|| run_pattern1(&cfg))??;
    emit(&records, &a.common, "bench_p1.csv", out)
}

fn cmd_bench_p2(a: BenchP2Args, out: &mut dyn Write, _err: &mut dyn Write) -> Result<(), Error> {
    let p = prepare(&a.common, 9)?;
    let cfg = Pattern2Config {
        shape: p.shape,
        true_mean: a.common.mean,
        true_std: a.common.std,
        true_ranks: p.ranks,
        sigma_grid: p.sigma_grid,
        outlier_ratios: a.ratios,
        outlier_scales: a.scales,
        outlier_mode: match a.outlier_mode {
            OutlierModeArg::Multiply => OutlierMode::Multiply,
            OutlierModeArg::ScaledMean => OutlierMode::ScaledMean,
        },
        reps: a.common.reps,
        seed: a.common.seed,
        solver: p.solver,
    };
    let records = with_pool(|| run_pattern2(&cfg))??;
    emit(&records, &a.common, "bench_p2.csv", out)
}
