//! `ece-ci`: estimate top-k calibration error from prediction logs and run
//! the simulation studies.
//!
//! Two subcommands: `compute` ingests a prediction CSV and emits a JSON
//! report with the debiased estimate, a confidence set, and the calibration
//! test; `simulate` runs coverage/length/power studies over a declarative
//! grid and writes plot-ready CSV/JSON. Exit codes: 0 success, 2 bad
//! usage/input, 3 numerical failure.

mod config;
mod csv_io;
mod report;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ece_ci::{
    bin_stats, bootstrap_ci, choose_m, debiased_ece, estimate_report, hulc_ci, rows_to_csv,
    rows_to_json, run_experiment, sigma0_sq_default, sigma1_hat_sq, subsampling_ci, tcal_statistic,
    tcal_threshold, topk_project, MethodChoice, PartitionSpec, ResampleConfig, ResampleMethod,
    VarianceEstimates,
};
use sha2::{Digest, Sha256};

use crate::report::{ConfigEcho, ReportDocument, Results};

/// The fold interval always runs with the median-unbiasedness stand-in.
const HULC_DELTA: f64 = 0.0;

#[derive(Parser)]
#[command(
    name = "ece-ci",
    version,
    about = "Debiased squared calibration error: estimates, confidence sets, and simulation studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate calibration error from a prediction CSV and report a
    /// confidence set as JSON.
    Compute(ComputeArgs),
    /// Run coverage/length/power studies from a TOML grid description.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ComputeArgs {
    /// Prediction CSV; header `z_1,…,z_K,label` or `z_1,…,z_K,y_1,…,y_K`.
    #[arg(long)]
    input: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluation depth: calibration of the top k predicted probabilities.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Total cells per axis (mK). Default: 50 when k = 1, otherwise the
    /// n^{2/(4+k)} rule rounded to whole cells.
    #[arg(long)]
    mk: Option<usize>,
    /// Miscoverage level of the confidence set.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Seed for the resampling methods (ignored by `adjusted`).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; env CALIB_CI_THREADS is the fallback.
    #[arg(long)]
    threads: Option<usize>,
    /// Interval/test construction: adjusted, bootstrap, subsampling, hulc,
    /// or tcal.
    #[arg(long, default_value = "adjusted")]
    method: MethodChoice,
    /// Resamples for bootstrap/subsampling intervals and the
    /// consistency-resampling threshold.
    #[arg(long, default_value_t = 1000)]
    boot_reps: usize,
    /// Subsample size b; default ⌊√n⌋.
    #[arg(long)]
    subsample_size: Option<usize>,
    /// Subsampling rate exponent γ in τ_n = n^γ.
    #[arg(long, default_value_t = 0.5)]
    subsample_rate: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment grid description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Replications per grid point; overrides the config value.
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; env CALIB_CI_THREADS is the fallback.
    #[arg(long)]
    threads: Option<usize>,
    /// Output prefix: writes <prefix>.csv and <prefix>.json.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

/// A failure routed to an exit code: 2 for usage/input, 3 for numerics.
enum Failure {
    Usage(String),
    Numerical(String),
}

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Post-validation library failures: numerical machinery → exit 3,
/// anything else is still an input problem.
fn staged(e: ece_ci::Error) -> Failure {
    if e.is_numerical() {
        Failure::Numerical(e.to_string())
    } else {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Compute(args) => cmd_compute(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

/// `--threads`, then CALIB_CI_THREADS, then the library default.
fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("CALIB_CI_THREADS") {
        Ok(raw) => raw.trim().parse::<usize>().map(Some).map_err(|_| {
            Failure::Usage(format!("CALIB_CI_THREADS=`{raw}` is not a thread count"))
        }),
        Err(_) => Ok(None),
    }
}

/// Runs `work` on a dedicated pool of the requested size; with no request,
/// parallelism stays on the process-global pool.
fn with_pool<T: Send>(
    threads: Option<usize>,
    work: impl FnOnce() -> T + Send,
) -> Result<T, Failure> {
    match threads {
        None => Ok(work()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Failure::Usage(format!("cannot build a {t}-thread pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

fn cmd_compute(args: &ComputeArgs) -> Result<(), Failure> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::Usage(format!(
            "--alpha {} must lie strictly inside (0, 1)",
            args.alpha
        )));
    }
    let bytes = std::fs::read(&args.input)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.input.display())))?;
    let digest = format!("{:x}", Sha256::digest(&bytes));
    let data = csv_io::parse_predictions(&bytes).map_err(usage)?;

    let threads = resolve_threads(args.threads)?;
    let doc = with_pool(threads, || build_report(args, &data, digest))??;
    let json = doc.to_json();
    match &args.out {
        Some(path) => std::fs::write(path, json)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

/// The full `compute` pipeline after ingestion: project → bin → estimate →
/// variances → the chosen interval or test.
fn build_report(
    args: &ComputeArgs,
    data: &ece_ci::Dataset,
    digest: String,
) -> Result<ReportDocument, Failure> {
    let n = data.len();
    let num_classes = data.num_classes();
    let view = topk_project(data, args.k).map_err(usage)?;
    let cells = args.mk.unwrap_or_else(|| {
        if args.k == 1 {
            50
        } else {
            choose_m(n, args.k, num_classes, 1.0, 1.0) * num_classes
        }
    });
    let spec = PartitionSpec::new(num_classes, args.k, cells).map_err(usage)?;

    let sigma0 = sigma0_sq_default(num_classes, args.k).map_err(staged)?;
    let stats = bin_stats(&view, &spec).map_err(staged)?;
    let estimate = debiased_ece(&stats, n, spec).map_err(staged)?;
    let sigma1_sq = sigma1_hat_sq(&stats, n).map_err(staged)?;
    let variances = VarianceEstimates::new(sigma0, sigma1_sq);

    let mut results = Results::from_estimate(estimate.t, estimate.t_plus, &variances);
    let mut warnings = Vec::new();
    if variances.sigma1_hat_sq < 0.0 {
        warnings.push(String::from(
            "plug-in variance estimate was negative and has been floored at zero",
        ));
    }
    let resample = |method| {
        let mut cfg = ResampleConfig::new(method, args.alpha, args.seed);
        cfg.replications = args.boot_reps;
        cfg.subsample_size = args.subsample_size;
        cfg.rate_exponent = args.subsample_rate;
        cfg
    };
    match args.method {
        MethodChoice::Adjusted => {
            let full = estimate_report(estimate, variances, args.alpha).map_err(staged)?;
            if full.ci_squared.degenerate_variance {
                warnings.push(String::from(
                    "dispersion estimate is exactly zero; the interval degenerates to a point",
                ));
            }
            results.set_adjusted(&full);
        }
        MethodChoice::Bootstrap => {
            let ci = bootstrap_ci(data, args.k, &spec, &resample(ResampleMethod::Bootstrap))
                .map_err(staged)?;
            results.set_baseline(&ci);
        }
        MethodChoice::Subsampling => {
            let ci = subsampling_ci(data, args.k, &spec, &resample(ResampleMethod::Subsampling))
                .map_err(staged)?;
            results.set_baseline(&ci);
        }
        MethodChoice::Hulc => {
            let ci = hulc_ci(data, args.k, &spec, args.alpha, args.seed, HULC_DELTA)
                .map_err(staged)?;
            results.set_baseline(&ci);
            warnings.push(String::from(
                "fold interval uses the δ = 0 median-unbiasedness stand-in",
            ));
        }
        MethodChoice::Tcal => {
            let threshold = tcal_threshold(&view, &spec, args.alpha, args.boot_reps, args.seed)
                .map_err(staged)?;
            let statistic = tcal_statistic(&stats, n).map_err(staged)?;
            results.set_tcal(statistic, threshold);
        }
    }

    let config = ConfigEcho {
        input: args.input.display().to_string(),
        n,
        num_classes,
        k: args.k,
        m: spec.resolution(),
        cells_per_axis: spec.cells_per_axis(),
        alpha: args.alpha,
        seed: args.seed,
        method: args.method.to_string(),
        bootstrap_variant: String::from("percentile"),
        resample_reps: args.boot_reps,
        subsample_size: args.subsample_size,
        subsample_rate: args.subsample_rate,
        hulc_delta: HULC_DELTA,
    };
    let mut doc = ReportDocument::new(digest, config, results);
    for w in warnings {
        doc.warn(w);
    }
    Ok(doc)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let plan = config::SimulateConfig::parse(&text)
        .and_then(|cfg| cfg.resolve(args.reps, args.seed))
        .map_err(usage)?;

    let threads = resolve_threads(args.threads)?;
    let rows = with_pool(threads, || {
        run_experiment(
            &plan.grid,
            &plan.methods,
            plan.reps,
            plan.alpha,
            plan.seed,
            &plan.options,
        )
    })?
    .map_err(staged)?;

    for row in &rows {
        eprintln!(
            "setting {} β={} {} ({} reps): {:.2}s",
            row.setting, row.beta, row.method, row.replications, row.seconds
        );
    }
    let csv_path = with_suffix(&args.out, "csv");
    let json_path = with_suffix(&args.out, "json");
    write_file(&csv_path, &rows_to_csv(&rows))?;
    let mut json = rows_to_json(&rows);
    json.push('\n');
    write_file(&json_path, &json)?;
    eprintln!(
        "wrote {} and {} ({} rows)",
        csv_path.display(),
        json_path.display(),
        rows.len()
    );
    Ok(())
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    PathBuf::from(format!("{}.{ext}", prefix.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}
