//! Thin command-line harness over the library's experiment drivers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use threshold_ou::error::Error;
use threshold_ou::estimate::{Method, ThresholdGrid};
use threshold_ou::experiments::{
    self, ExperimentConfig, FitReport, RateStudyConfig, RatesConfig,
};
use threshold_ou::model::{ModelParams, SidePair};
use threshold_ou::simulate::{simulate_batch, Init, SimSpec};

#[derive(Parser)]
#[command(
    name = "threshold-ou",
    version,
    about = "Simulate, estimate and test threshold Ornstein-Uhlenbeck models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate trajectories and write them as t,path_id,x CSV rows.
    Simulate(SimulateArgs),
    /// Estimate drift/volatility, searching the threshold on a grid.
    Estimate(EstimateArgs),
    /// Monte Carlo check of the estimator CLT at the true threshold.
    McClt(McCltArgs),
    /// Terminal-value histogram against the stationary density.
    InvariantDensity(DensityArgs),
    /// High-frequency convergence ladder for estimator and local time.
    RateStudy(RateStudyArgs),
    /// Full pipeline on a date,value CSV of rates.
    Rates(RatesArgs),
}

/// Model coefficients; defaults form a mildly bimodal two-regime setup.
#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a_plus: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a_minus: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b_plus: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b_minus: Option<f64>,
    #[arg(long)]
    sigma_plus: Option<f64>,
    #[arg(long)]
    sigma_minus: Option<f64>,
}

/// Optional JSON config file; any present key acts as a default the flags
/// can still override.
#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    r: Option<f64>,
    a_plus: Option<f64>,
    a_minus: Option<f64>,
    b_plus: Option<f64>,
    b_minus: Option<f64>,
    sigma_plus: Option<f64>,
    sigma_minus: Option<f64>,
    t: Option<f64>,
    n: Option<usize>,
    paths: Option<usize>,
    seed: Option<u64>,
    substeps: Option<usize>,
    x0: Option<f64>,
    stationary: Option<bool>,
    method: Option<String>,
    delta: Option<f64>,
    grid_points: Option<usize>,
    threshold: Option<f64>,
    alpha: Option<f64>,
    bins: Option<usize>,
    ladder: Option<Vec<usize>>,
    n_ref: Option<usize>,
    p: Option<f64>,
    dt_months: Option<f64>,
    tail: Option<usize>,
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig, Error> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::InvalidInput(format!("bad config file: {e}")))
        }
    }
}

fn build_params(args: &ModelArgs, file: &FileConfig) -> Result<ModelParams, Error> {
    let demo = ModelParams::demo();
    ModelParams::new(
        args.r.or(file.r).unwrap_or(demo.threshold),
        SidePair::new(
            args.a_plus.or(file.a_plus).unwrap_or(demo.a.plus),
            args.a_minus.or(file.a_minus).unwrap_or(demo.a.minus),
        ),
        SidePair::new(
            args.b_plus.or(file.b_plus).unwrap_or(demo.b.plus),
            args.b_minus.or(file.b_minus).unwrap_or(demo.b.minus),
        ),
        SidePair::new(
            args.sigma_plus.or(file.sigma_plus).unwrap_or(demo.sigma.plus),
            args.sigma_minus
                .or(file.sigma_minus)
                .unwrap_or(demo.sigma.minus),
        ),
    )
}

fn parse_method(flag: &Option<String>, file: &FileConfig) -> Result<Method, Error> {
    let name = flag
        .clone()
        .or(file.method.clone())
        .unwrap_or_else(|| "mle".to_string());
    match name.to_ascii_lowercase().as_str() {
        "mle" => Ok(Method::Mle),
        "qmle" => Ok(Method::Qmle),
        other => Err(Error::InvalidInput(format!(
            "method must be 'mle' or 'qmle', got '{other}'"
        ))),
    }
}

/// Write text to `<out>` (or stdout when absent).
fn emit_text(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(text.as_bytes())?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_pretty<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))
}

/// Write the summary JSON to `<prefix>.json` and the rows CSV to
/// `<prefix>.csv`; without a prefix the JSON goes to stdout and the CSV is
/// skipped.
fn emit_report(
    prefix: &Option<PathBuf>,
    json: &str,
    write_csv: impl FnOnce(&mut BufWriter<File>) -> Result<(), Error>,
) -> Result<(), Error> {
    match prefix {
        Some(path) => {
            let json_path = with_extension(path, "json");
            let csv_path = with_extension(path, "csv");
            std::fs::write(json_path, json)?;
            let mut csv = BufWriter::new(File::create(csv_path)?);
            write_csv(&mut csv)?;
            Ok(())
        }
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    let mut p = path.to_path_buf();
    p.set_extension(ext);
    p
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Observation horizon T.
    #[arg(long)]
    t: Option<f64>,
    /// Number of observation steps N.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Euler substeps per observation step.
    #[arg(long)]
    substeps: Option<usize>,
    /// Start from this point instead of the stationary distribution.
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let file = load_config(&args.config)?;
    let params = build_params(&args.model, &file)?;
    // precedence: explicit --x0 flag, then the config file's choice
    let init = if let Some(x0) = args.x0 {
        Init::Deterministic(x0)
    } else if file.stationary.unwrap_or(false) {
        Init::Stationary
    } else if let Some(x0) = file.x0 {
        Init::Deterministic(x0)
    } else {
        Init::Stationary
    };
    let spec = SimSpec::new(
        params,
        args.t.or(file.t).unwrap_or(100.0),
        args.n.or(file.n).unwrap_or(10_000),
        init,
    )?
    .with_substeps(args.substeps.or(file.substeps).unwrap_or(1))?;
    let paths = simulate_batch(&spec, args.paths.or(file.paths).unwrap_or(1), args.seed.or(file.seed).unwrap_or(0))?;
    let mut buf = Vec::new();
    experiments::write_paths_csv(&paths, &mut buf)?;
    emit_text(
        &args.out,
        std::str::from_utf8(&buf).expect("CSV is valid UTF-8"),
    )
}

#[derive(Args)]
struct EstimateArgs {
    /// Read the trajectory from a t,path_id,x CSV instead of simulating.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Which path id to read from the input file.
    #[arg(long, default_value_t = 0)]
    path_id: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// mle (volatility-aware scoring) or qmle.
    #[arg(long)]
    method: Option<String>,
    /// Percentile window for the threshold grid.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Fix the threshold here and skip the grid search.
    #[arg(long, allow_negative_numbers = true)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Error> {
    let file = load_config(&args.config)?;
    let method = parse_method(&args.method, &file)?;
    let traj = match &args.input {
        Some(path) => experiments::read_path_csv(path, args.path_id)?,
        None => {
            let params = build_params(&args.model, &file)?;
            let spec = SimSpec::new(
                params,
                args.t.or(file.t).unwrap_or(1000.0),
                args.n.or(file.n).unwrap_or(1_000_000),
                Init::Stationary,
            )?;
            let mut rng = threshold_ou::numerics::RngStream::new(
                args.seed.or(file.seed).unwrap_or(0),
                0,
            );
            threshold_ou::simulate::simulate(&spec, &mut rng)?
        }
    };
    let fit = match args.threshold.or(file.threshold) {
        Some(r) => threshold_ou::estimate::fit_at_threshold(&traj, r, method)?,
        None => {
            let grid = ThresholdGrid::from_trajectory(
                &traj,
                args.delta.or(file.delta).unwrap_or(ThresholdGrid::DEFAULT_DELTA),
                args.grid_points
                    .or(file.grid_points)
                    .unwrap_or(ThresholdGrid::DEFAULT_POINTS),
            )?;
            threshold_ou::estimate::threshold_search(&traj, &grid, method)?
        }
    };
    let report = FitReport::from_fit(fit)?;
    emit_text(&args.out, &json_pretty(&report)?)
}

#[derive(Args)]
struct McCltArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// KS significance level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Output prefix: writes <out>.json and <out>.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_mc_clt(args: McCltArgs) -> Result<(), Error> {
    let file = load_config(&args.config)?;
    let cfg = ExperimentConfig {
        params: build_params(&args.model, &file)?,
        horizon: args.t.or(file.t).unwrap_or(100.0),
        steps: args.n.or(file.n).unwrap_or(100_000),
        n_paths: args.paths.or(file.paths).unwrap_or(200),
        seed: args.seed.or(file.seed).unwrap_or(0),
    };
    let report = experiments::mc_clt(&cfg, args.alpha.or(file.alpha).unwrap_or(0.01))?;
    let json = json_pretty(&report)?;
    emit_report(&args.out, &json, |w| experiments::write_mc_clt_csv(&report, w))
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_invariant_density(args: DensityArgs) -> Result<(), Error> {
    let file = load_config(&args.config)?;
    let cfg = ExperimentConfig {
        params: build_params(&args.model, &file)?,
        horizon: args.t.or(file.t).unwrap_or(200.0),
        steps: args.n.or(file.n).unwrap_or(200_000),
        n_paths: args.paths.or(file.paths).unwrap_or(500),
        seed: args.seed.or(file.seed).unwrap_or(0),
    };
    let report = experiments::invariant_density(&cfg, args.bins.or(file.bins).unwrap_or(60))?;
    let json = json_pretty(&report)?;
    emit_report(&args.out, &json, |w| {
        experiments::write_density_csv(&report, w)
    })
}

#[derive(Args)]
struct RateStudyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Fixed horizon of the high-frequency asymptotics.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    /// Comma-separated coarse observation counts.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<usize>>,
    #[arg(long)]
    n_ref: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_rate_study(args: RateStudyArgs) -> Result<(), Error> {
    let file = load_config(&args.config)?;
    // default model here: driftless with unequal volatilities, the cleanest
    // regime for watching the quarter-power rate
    let model_file = if args.model.r.is_none()
        && args.model.a_plus.is_none()
        && args.model.a_minus.is_none()
        && args.model.b_plus.is_none()
        && args.model.b_minus.is_none()
        && args.model.sigma_plus.is_none()
        && args.model.sigma_minus.is_none()
        && file.r.is_none()
        && file.a_plus.is_none()
        && file.sigma_plus.is_none()
    {
        ModelParams::new(
            0.0,
            SidePair::uniform(0.0),
            SidePair::uniform(0.0),
            SidePair::new(1.0, 0.6),
        )?
    } else {
        build_params(&args.model, &file)?
    };
    let cfg = RateStudyConfig {
        params: model_file,
        horizon: args.t.or(file.t).unwrap_or(1.0),
        x0: args.x0.or(file.x0).unwrap_or(0.0),
        ladder: args
            .ladder
            .or(file.ladder)
            .unwrap_or_else(|| vec![1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14, 1 << 15, 1 << 16]),
        n_ref: args.n_ref.or(file.n_ref).unwrap_or(1 << 20),
        n_paths: args.paths.or(file.paths).unwrap_or(300),
        seed: args.seed.or(file.seed).unwrap_or(0),
    };
    let report = experiments::rate_study(&cfg)?;
    let json = json_pretty(&report)?;
    emit_report(&args.out, &json, |w| {
        experiments::write_rate_study_csv(&report, w)
    })
}

#[derive(Args)]
struct RatesArgs {
    /// CSV file with a date,value header.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    dt_months: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Confidence level of the regime test.
    #[arg(long)]
    p: Option<f64>,
    /// Use only the last N observations.
    #[arg(long)]
    tail: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn cmd_rates(args: RatesArgs) -> Result<(), Error> {
    let file = load_config(&args.config)?;
    let cfg = RatesConfig {
        dt_months: args
            .dt_months
            .or(file.dt_months)
            .unwrap_or(threshold_ou::series::DEFAULT_DT_MONTHS),
        delta: args.delta.or(file.delta).unwrap_or(ThresholdGrid::DEFAULT_DELTA),
        n_points: args
            .grid_points
            .or(file.grid_points)
            .unwrap_or(ThresholdGrid::DEFAULT_POINTS),
        p: args.p.or(file.p).unwrap_or(0.95),
        tail: args.tail.or(file.tail),
    };
    let report = experiments::rates_from_csv(&args.input, &cfg)?;
    emit_text(&args.out, &json_pretty(&report)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::McClt(args) => cmd_mc_clt(args),
        Command::InvariantDensity(args) => cmd_invariant_density(args),
        Command::RateStudy(args) => cmd_rate_study(args),
        Command::Rates(args) => cmd_rates(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Diverged { .. } | Error::PathDiverged { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
