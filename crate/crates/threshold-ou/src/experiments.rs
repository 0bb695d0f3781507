//! Experiment drivers behind the CLI and the runnable examples: path
//! simulation to CSV, estimation reports, the Monte Carlo CLT check, the
//! invariant-density comparison, the discretization-rate ladder and the
//! interest-rate pipeline. Every driver is deterministic given its config.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{
    drift_gap_norm, fit_at_threshold, threshold_search, DriftParams, FitResult, Method,
    ThresholdGrid,
};
use crate::inference::{test_threshold, TestResult};
use crate::linalg::Mat2;
use crate::model::{gamma_theoretical, stationary_dist, ModelParams, Side, SidePair};
use crate::numerics::{ks_critical, ks_statistic, std_normal_cdf, RngStream};
use crate::series::{parse_rate_series, RateSeries};
use crate::simulate::{simulate, Init, SimSpec, Trajectory};
use crate::stats::sufficient_stats;

/// Version stamp carried by every JSON report this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Common experiment knobs shared by the Monte Carlo drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub horizon: f64,
    pub steps: usize,
    pub n_paths: usize,
    pub seed: u64,
}

// ---------------------------------------------------------------------------
// Path simulation to CSV.
// ---------------------------------------------------------------------------

/// Write a batch of trajectories as `t,path_id,x` rows.
pub fn write_paths_csv(paths: &[Trajectory], out: &mut impl Write) -> Result<()> {
    writeln!(out, "t,path_id,x")?;
    for (id, traj) in paths.iter().enumerate() {
        for (k, x) in traj.values().iter().enumerate() {
            let t = traj.t0 + traj.dt * k as f64;
            writeln!(out, "{t},{id},{x}")?;
        }
    }
    Ok(())
}

/// Read one path back from a `t,path_id,x` file.
pub fn read_path_csv(path: &Path, path_id: usize) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    if header.trim() != "t,path_id,x" {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header 't,path_id,x', got '{}'", header.trim()),
        });
    }
    let mut ts: Vec<f64> = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let (t, id, x) = match (fields.next(), fields.next(), fields.next()) {
            (Some(t), Some(id), Some(x)) => (t, id, x),
            _ => {
                return Err(Error::Parse {
                    line,
                    message: "expected three comma-separated fields".into(),
                })
            }
        };
        let id: usize = id.trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad path id '{id}'"),
        })?;
        if id != path_id {
            continue;
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad number '{s}'"),
            })
        };
        ts.push(parse_f(t)?);
        xs.push(parse_f(x)?);
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "path {path_id} has fewer than two rows"
        )));
    }
    let dt = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
    for (k, &t) in ts.iter().enumerate() {
        let expected = ts[0] + dt * k as f64;
        if (t - expected).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::InvalidInput(
                "time stamps are not uniformly spaced".into(),
            ));
        }
    }
    Trajectory::new(ts[0], dt, xs)
}

// ---------------------------------------------------------------------------
// Estimation report.
// ---------------------------------------------------------------------------

/// JSON-facing estimation summary; embeds the complete fit so the report
/// can be re-scored offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub method: Method,
    pub threshold: f64,
    pub threshold_searched: bool,
    pub a_plus: f64,
    pub b_plus: f64,
    pub a_minus: f64,
    pub b_minus: f64,
    /// Mean-reversion levels b/a; null when the rate is numerically zero.
    pub level_plus: Option<f64>,
    pub level_minus: Option<f64>,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub loglik: f64,
    pub quasi_lik: f64,
    pub n_observations: usize,
    pub horizon: f64,
    pub fit: FitResult,
}

impl FitReport {
    pub fn from_fit(fit: FitResult) -> Result<FitReport> {
        let theta = fit.estimate.both()?;
        Ok(FitReport {
            schema_version: SCHEMA_VERSION,
            method: fit.method,
            threshold: fit.threshold,
            threshold_searched: fit.threshold_searched,
            a_plus: theta.a.plus,
            b_plus: theta.b.plus,
            a_minus: theta.a.minus,
            b_minus: theta.b.minus,
            level_plus: fit.reversion_level(Side::Plus),
            level_minus: fit.reversion_level(Side::Minus),
            sigma_plus: fit.sigma.plus,
            sigma_minus: fit.sigma.minus,
            loglik: fit.loglik,
            quasi_lik: fit.quasi_lik,
            n_observations: fit.stats.n,
            horizon: fit.stats.horizon,
            fit,
        })
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo CLT experiment.
// ---------------------------------------------------------------------------

/// One component's goodness-of-fit outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentKs {
    pub component: String,
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Result of the CLT reproduction: per-path scaled errors, their
/// standardized versions, KS outcomes and the covariance comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCltReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub ks_alpha: f64,
    /// sqrt(T) (theta_hat - theta) per path, order (a+, b+, a-, b-).
    #[serde(skip)]
    pub scaled_errors: Vec<[f64; 4]>,
    /// The same errors whitened by the theoretical CLT covariance.
    #[serde(skip)]
    pub standardized: Vec<[f64; 4]>,
    pub ks: Vec<ComponentKs>,
    pub all_ks_pass: bool,
    pub cov_theoretical: SidePair<Mat2>,
    pub cov_empirical: SidePair<Mat2>,
    /// max over entries of |emp - theory| / sqrt(theory_ii theory_jj).
    pub cov_max_rel_dev: f64,
    pub paths_skipped: usize,
}

/// Simulate stationary paths, estimate the drift at the true threshold and
/// compare the scaled estimation errors against their limit law.
pub fn mc_clt(cfg: &ExperimentConfig, ks_alpha: f64) -> Result<McCltReport> {
    let constants = gamma_theoretical(&cfg.params)?;
    let spec = SimSpec::new(cfg.params, cfg.horizon, cfg.steps, Init::Stationary)?;
    let truth = DriftParams {
        a: cfg.params.a,
        b: cfg.params.b,
    };
    let sqrt_t = cfg.horizon.sqrt();

    let whiten = SidePair::new(
        constants.clt_cov.plus.cholesky()?,
        constants.clt_cov.minus.cholesky()?,
    );

    let per_path: Vec<Option<([f64; 4], [f64; 4])>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(cfg.seed, i as u64);
            let traj = simulate(&spec, &mut rng).map_err(|e| match e {
                Error::Diverged { step } => Error::PathDiverged { path: i, step },
                other => other,
            })?;
            let stats = sufficient_stats(&traj, cfg.params.threshold);
            let est = crate::estimate::drift_mle(&stats);
            let theta = match est.both() {
                Ok(t) => t,
                Err(_) => return Ok(None),
            };
            let mut scaled = [0.0; 4];
            let mut standard = [0.0; 4];
            for (bi, side) in Side::BOTH.iter().enumerate() {
                let err = [
                    sqrt_t * (theta.a[*side] - truth.a[*side]),
                    sqrt_t * (theta.b[*side] - truth.b[*side]),
                ];
                let z = whiten[*side].solve_lower(err)?;
                scaled[2 * bi] = err[0];
                scaled[2 * bi + 1] = err[1];
                standard[2 * bi] = z[0];
                standard[2 * bi + 1] = z[1];
            }
            Ok(Some((scaled, standard)))
        })
        .collect::<Result<_>>()?;

    let mut scaled_errors = Vec::with_capacity(cfg.n_paths);
    let mut standardized = Vec::with_capacity(cfg.n_paths);
    let mut skipped = 0usize;
    for item in per_path {
        match item {
            Some((s, z)) => {
                scaled_errors.push(s);
                standardized.push(z);
            }
            None => skipped += 1,
        }
    }
    if standardized.len() < 2 {
        return Err(Error::NoValidCandidate);
    }

    let names = ["a_plus", "b_plus", "a_minus", "b_minus"];
    let critical = ks_critical(ks_alpha, standardized.len());
    let ks: Vec<ComponentKs> = (0..4)
        .map(|c| {
            let column: Vec<f64> = standardized.iter().map(|row| row[c]).collect();
            let statistic = ks_statistic(&column, std_normal_cdf);
            ComponentKs {
                component: names[c].to_string(),
                statistic,
                critical,
                pass: statistic < critical,
            }
        })
        .collect();
    let all_ks_pass = ks.iter().all(|k| k.pass);

    // per-side empirical covariance of the scaled errors
    let n = scaled_errors.len() as f64;
    let mut cov_empirical = SidePair::uniform(Mat2::identity());
    for (bi, side) in Side::BOTH.iter().enumerate() {
        let cols = [2 * bi, 2 * bi + 1];
        let mut mean = [0.0; 2];
        for row in &scaled_errors {
            mean[0] += row[cols[0]];
            mean[1] += row[cols[1]];
        }
        mean[0] /= n;
        mean[1] /= n;
        let mut c = [[0.0; 2]; 2];
        for row in &scaled_errors {
            let d = [row[cols[0]] - mean[0], row[cols[1]] - mean[1]];
            for i in 0..2 {
                for j in 0..2 {
                    c[i][j] += d[i] * d[j];
                }
            }
        }
        cov_empirical[*side] = Mat2([
            [c[0][0] / (n - 1.0), c[0][1] / (n - 1.0)],
            [c[1][0] / (n - 1.0), c[1][1] / (n - 1.0)],
        ]);
    }
    let mut max_rel: f64 = 0.0;
    for side in Side::BOTH {
        let th = constants.clt_cov[side];
        let emp = cov_empirical[side];
        for i in 0..2 {
            for j in 0..2 {
                let scale = (th.0[i][i] * th.0[j][j]).sqrt();
                max_rel = max_rel.max((emp.0[i][j] - th.0[i][j]).abs() / scale);
            }
        }
    }

    Ok(McCltReport {
        schema_version: SCHEMA_VERSION,
        config: *cfg,
        ks_alpha,
        scaled_errors,
        standardized,
        ks,
        all_ks_pass,
        cov_theoretical: constants.clt_cov,
        cov_empirical,
        cov_max_rel_dev: max_rel,
        paths_skipped: skipped,
    })
}

/// CSV rows of the CLT experiment: standardized and raw scaled errors.
pub fn write_mc_clt_csv(report: &McCltReport, out: &mut impl Write) -> Result<()> {
    writeln!(
        out,
        "path,za_plus,zb_plus,za_minus,zb_minus,ea_plus,eb_plus,ea_minus,eb_minus"
    )?;
    for (i, (z, e)) in report
        .standardized
        .iter()
        .zip(&report.scaled_errors)
        .enumerate()
    {
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{}",
            z[0], z[1], z[2], z[3], e[0], e[1], e[2], e[3]
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Invariant density experiment.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub x: f64,
    pub theoretical: f64,
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub ks_distance: f64,
    /// Number of strict local maxima of the theoretical density over the
    /// evaluation grid.
    pub theoretical_modes: usize,
    pub bins: Vec<DensityRow>,
    /// Riemann sum of the empirical histogram (should be one).
    pub histogram_mass: f64,
}

/// Terminal values of stationary paths against the stationary law.
pub fn invariant_density(cfg: &ExperimentConfig, n_bins: usize) -> Result<DensityReport> {
    if n_bins < 2 {
        return Err(Error::InvalidInput("need at least two bins".into()));
    }
    let dist = stationary_dist(&cfg.params)?;
    let spec = SimSpec::new(cfg.params, cfg.horizon, cfg.steps, Init::Stationary)?;
    let terminals: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(cfg.seed, i as u64);
            let traj = simulate(&spec, &mut rng).map_err(|e| match e {
                Error::Diverged { step } => Error::PathDiverged { path: i, step },
                other => other,
            })?;
            Ok(*traj.values().last().expect("non-empty path"))
        })
        .collect::<Result<_>>()?;

    let ks_distance = ks_statistic(&terminals, |x| dist.cdf(x));

    let lo = terminals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = terminals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let width = span / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &x in &terminals {
        let idx = (((x - lo) / width) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    let n = terminals.len() as f64;
    let bins: Vec<DensityRow> = (0..n_bins)
        .map(|i| {
            let x = lo + width * (i as f64 + 0.5);
            DensityRow {
                x,
                theoretical: dist.density(x),
                empirical: counts[i] as f64 / (n * width),
            }
        })
        .collect();
    let histogram_mass = bins.iter().map(|b| b.empirical * width).sum();

    // count strict local maxima of the theoretical density on a fine grid
    // padded beyond the sample range
    let pad = 0.2 * span;
    let fine = 4001usize;
    let step = (span + 2.0 * pad) / (fine - 1) as f64;
    let dens: Vec<f64> = (0..fine)
        .map(|i| dist.density(lo - pad + step * i as f64))
        .collect();
    let mut modes = 0usize;
    for i in 1..fine - 1 {
        if dens[i] > dens[i - 1] && dens[i] > dens[i + 1] {
            modes += 1;
        }
    }

    Ok(DensityReport {
        schema_version: SCHEMA_VERSION,
        config: *cfg,
        ks_distance,
        theoretical_modes: modes,
        bins,
        histogram_mass,
    })
}

pub fn write_density_csv(report: &DensityReport, out: &mut impl Write) -> Result<()> {
    writeln!(out, "x,theoretical_density,empirical_density")?;
    for row in &report.bins {
        writeln!(out, "{},{},{}", row.x, row.theoretical, row.empirical)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Discretization-rate study.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudyConfig {
    pub params: ModelParams,
    pub horizon: f64,
    pub x0: f64,
    /// Coarse observation counts; every entry must divide `n_ref`.
    pub ladder: Vec<usize>,
    /// Reference (finest) observation count standing in for the
    /// continuous-record estimator.
    pub n_ref: usize,
    pub n_paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudyRow {
    pub n: usize,
    /// Mean Euclidean gap between the coarse and reference drift
    /// estimates; None when no path had both sides valid at this level.
    /// Ill-conditioned paths (near-singular normal equations) make this
    /// mean heavy-tailed, so the median is reported alongside.
    pub mean_estimator_gap: Option<f64>,
    pub median_estimator_gap: Option<f64>,
    pub mean_local_time_gap: f64,
    pub median_local_time_gap: f64,
    pub valid_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudyReport {
    pub schema_version: u32,
    pub config: RateStudyConfig,
    pub rows: Vec<RateStudyRow>,
    /// Log-log slopes fitted over the ladder (reference level excluded).
    pub slope_estimator: Option<f64>,
    pub slope_local_time: Option<f64>,
}

fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// High-frequency convergence of the discrete estimator and of the local
/// time approximation toward their finest-grid values on the same paths.
pub fn rate_study(cfg: &RateStudyConfig) -> Result<RateStudyReport> {
    for &n in &cfg.ladder {
        if n == 0 || !cfg.n_ref.is_multiple_of(n) {
            return Err(Error::InvalidInput(format!(
                "ladder entry {n} must divide n_ref = {}",
                cfg.n_ref
            )));
        }
    }
    let spec = SimSpec::new(cfg.params, cfg.horizon, cfg.n_ref, Init::Deterministic(cfg.x0))?;
    let r = cfg.params.threshold;

    struct PathGaps {
        estimator: Vec<Option<f64>>,
        local_time: Vec<f64>,
    }

    let gaps: Vec<PathGaps> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(cfg.seed, i as u64);
            let traj = simulate(&spec, &mut rng).map_err(|e| match e {
                Error::Diverged { step } => Error::PathDiverged { path: i, step },
                other => other,
            })?;
            let ref_stats = sufficient_stats(&traj, r);
            let ref_est = crate::estimate::drift_mle(&ref_stats);
            let ref_theta = ref_est.both().ok();
            let ref_lt = ref_stats.local_time;
            let mut estimator = Vec::with_capacity(cfg.ladder.len());
            let mut local_time = Vec::with_capacity(cfg.ladder.len());
            for &n in &cfg.ladder {
                if n == cfg.n_ref {
                    estimator.push(ref_theta.map(|_| 0.0));
                    local_time.push(0.0);
                    continue;
                }
                let sub = traj.subsample(cfg.n_ref / n)?;
                let stats = sufficient_stats(&sub, r);
                let est = crate::estimate::drift_mle(&stats);
                let gap = match (est.both().ok(), ref_theta) {
                    (Some(theta), Some(reference)) => {
                        Some(drift_gap_norm(&theta, &reference))
                    }
                    _ => None,
                };
                estimator.push(gap);
                local_time.push((stats.local_time - ref_lt).abs());
            }
            Ok(PathGaps {
                estimator,
                local_time,
            })
        })
        .collect::<Result<_>>()?;

    let median = |values: &mut Vec<f64>| -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some(values[(values.len() - 1) / 2])
    };
    let mut rows = Vec::with_capacity(cfg.ladder.len());
    for (j, &n) in cfg.ladder.iter().enumerate() {
        let mut est: Vec<f64> = gaps.iter().filter_map(|g| g.estimator[j]).collect();
        let mut lt: Vec<f64> = gaps.iter().map(|g| g.local_time[j]).collect();
        let est_count = est.len();
        let est_mean = if est_count > 0 {
            Some(est.iter().sum::<f64>() / est_count as f64)
        } else {
            None
        };
        let lt_mean = lt.iter().sum::<f64>() / lt.len() as f64;
        rows.push(RateStudyRow {
            n,
            mean_estimator_gap: est_mean,
            median_estimator_gap: median(&mut est),
            mean_local_time_gap: lt_mean,
            median_local_time_gap: median(&mut lt).expect("at least one path"),
            valid_paths: est_count,
        });
    }

    let est_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.n != cfg.n_ref)
        .filter_map(|row| {
            row.mean_estimator_gap
                .filter(|g| *g > 0.0)
                .map(|g| ((row.n as f64).ln(), g.ln()))
        })
        .collect();
    let lt_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.n != cfg.n_ref && row.mean_local_time_gap > 0.0)
        .map(|row| ((row.n as f64).ln(), row.mean_local_time_gap.ln()))
        .collect();

    Ok(RateStudyReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        rows,
        slope_estimator: ols_slope(&est_points),
        slope_local_time: ols_slope(&lt_points),
    })
}

pub fn write_rate_study_csv(report: &RateStudyReport, out: &mut impl Write) -> Result<()> {
    writeln!(out, "n,mean_estimator_gap,mean_local_time_gap")?;
    for row in &report.rows {
        let gap = row
            .mean_estimator_gap
            .map(|g| g.to_string())
            .unwrap_or_default();
        writeln!(out, "{},{gap},{}", row.n, row.mean_local_time_gap)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Interest-rate pipeline.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesConfig {
    pub dt_months: f64,
    pub delta: f64,
    pub n_points: usize,
    /// Confidence level of the regime test.
    pub p: f64,
    /// Keep only the last n observations when set.
    pub tail: Option<usize>,
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig {
            dt_months: crate::series::DEFAULT_DT_MONTHS,
            delta: ThresholdGrid::DEFAULT_DELTA,
            n_points: ThresholdGrid::DEFAULT_POINTS,
            p: 0.95,
            tail: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub p: f64,
    pub q_p: f64,
    pub min_mahalanobis: f64,
    pub reject: bool,
    pub threshold_estimated: bool,
}

impl From<&TestResult> for TestSummary {
    fn from(t: &TestResult) -> Self {
        TestSummary {
            p: t.p,
            q_p: t.q_p,
            min_mahalanobis: t.min_mahalanobis,
            reject: t.reject,
            threshold_estimated: t.threshold_estimated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesMethodReport {
    pub method: Method,
    pub threshold: f64,
    pub a_plus: f64,
    pub b_plus: f64,
    pub a_minus: f64,
    pub b_minus: f64,
    pub level_plus: Option<f64>,
    pub level_minus: Option<f64>,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub loglik: f64,
    pub quasi_lik: f64,
    pub test: TestSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesReport {
    pub schema_version: u32,
    pub n_observations: usize,
    pub dropped_rows: usize,
    pub dt_months: f64,
    pub horizon_months: f64,
    pub first_date: chrono::NaiveDate,
    pub last_date: chrono::NaiveDate,
    pub mle: RatesMethodReport,
    pub qmle: RatesMethodReport,
}

fn rates_method_report(
    traj: &Trajectory,
    grid: &ThresholdGrid,
    method: Method,
    p: f64,
) -> Result<RatesMethodReport> {
    let fit = threshold_search(traj, grid, method)?;
    let theta = fit.estimate.both()?;
    let test = test_threshold(&fit, p)?;
    Ok(RatesMethodReport {
        method,
        threshold: fit.threshold,
        a_plus: theta.a.plus,
        b_plus: theta.b.plus,
        a_minus: theta.a.minus,
        b_minus: theta.b.minus,
        level_plus: fit.reversion_level(Side::Plus),
        level_minus: fit.reversion_level(Side::Minus),
        sigma_plus: fit.sigma.plus,
        sigma_minus: fit.sigma.minus,
        loglik: fit.loglik,
        quasi_lik: fit.quasi_lik,
        test: TestSummary::from(&test),
    })
}

/// Full pipeline on an already-parsed series: threshold search under both
/// objectives, drift and volatility estimates, reversion levels and the
/// regime test.
pub fn rates_pipeline(series: &RateSeries, dropped: usize, cfg: &RatesConfig) -> Result<RatesReport> {
    let series = match cfg.tail {
        Some(n) => series.tail(n),
        None => series.clone(),
    };
    if series.len() < 10 {
        return Err(Error::InvalidInput(
            "rate series too short to estimate anything".into(),
        ));
    }
    let traj = series.to_trajectory()?;
    let grid = ThresholdGrid::from_trajectory(&traj, cfg.delta, cfg.n_points)?;
    Ok(RatesReport {
        schema_version: SCHEMA_VERSION,
        n_observations: series.len(),
        dropped_rows: dropped,
        dt_months: series.dt_months,
        horizon_months: traj.horizon(),
        first_date: series.dates[0],
        last_date: *series.dates.last().expect("non-empty"),
        mle: rates_method_report(&traj, &grid, Method::Mle, cfg.p)?,
        qmle: rates_method_report(&traj, &grid, Method::Qmle, cfg.p)?,
    })
}

/// Parse a CSV file and run the pipeline.
pub fn rates_from_csv(path: &Path, cfg: &RatesConfig) -> Result<RatesReport> {
    let parsed = parse_rate_series(path, cfg.dt_months)?;
    rates_pipeline(&parsed.series, parsed.dropped, cfg)
}

// ---------------------------------------------------------------------------
// Test-calibration driver (used by the examples and the acceptance suite).
// ---------------------------------------------------------------------------

/// How the per-run threshold is chosen during calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CalibrationThreshold {
    /// Fix the threshold at the true model threshold.
    True,
    /// Fix the threshold at each run's sample median.
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub p: f64,
    pub runs: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub skipped: usize,
}

/// Rejection rate of the regime test over repeated stationary runs.
pub fn test_calibration(
    cfg: &ExperimentConfig,
    p: f64,
    threshold: CalibrationThreshold,
) -> Result<CalibrationReport> {
    let spec = SimSpec::new(cfg.params, cfg.horizon, cfg.steps, Init::Stationary)?;
    let outcomes: Vec<Option<bool>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(cfg.seed, i as u64);
            let traj = simulate(&spec, &mut rng).map_err(|e| match e {
                Error::Diverged { step } => Error::PathDiverged { path: i, step },
                other => other,
            })?;
            let r = match threshold {
                CalibrationThreshold::True => cfg.params.threshold,
                CalibrationThreshold::Median => {
                    let mut sorted = traj.values().to_vec();
                    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    sorted[(sorted.len() - 1) / 2]
                }
            };
            let fit = match fit_at_threshold(&traj, r, Method::Mle) {
                Ok(fit) => fit,
                Err(Error::DegenerateSide(_)) | Err(Error::SideUnvisited(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            match test_threshold(&fit, p) {
                Ok(t) => Ok(Some(t.reject)),
                Err(Error::SingularMatrix) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut rejections = 0usize;
    let mut skipped = 0usize;
    let mut runs = 0usize;
    for o in outcomes {
        match o {
            Some(true) => {
                rejections += 1;
                runs += 1;
            }
            Some(false) => runs += 1,
            None => skipped += 1,
        }
    }
    if runs == 0 {
        return Err(Error::NoValidCandidate);
    }
    Ok(CalibrationReport {
        schema_version: SCHEMA_VERSION,
        config: *cfg,
        p,
        runs,
        rejections,
        rejection_rate: rejections as f64 / runs as f64,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::simulate_batch;

    fn demo_cfg() -> ExperimentConfig {
        ExperimentConfig {
            params: ModelParams::demo(),
            horizon: 20.0,
            steps: 2000,
            n_paths: 8,
            seed: 100,
        }
    }

    #[test]
    fn paths_csv_roundtrip_and_determinism() {
        let cfg = demo_cfg();
        let spec = SimSpec::new(cfg.params, cfg.horizon, cfg.steps, Init::Stationary).unwrap();
        let paths = simulate_batch(&spec, 3, cfg.seed).unwrap();
        let mut buf1 = Vec::new();
        write_paths_csv(&paths, &mut buf1).unwrap();
        let paths2 = simulate_batch(&spec, 3, cfg.seed).unwrap();
        let mut buf2 = Vec::new();
        write_paths_csv(&paths2, &mut buf2).unwrap();
        assert_eq!(buf1, buf2, "rerun must be byte-identical");
        assert_eq!(
            buf1.iter().filter(|&&b| b == b'\n').count(),
            1 + 3 * (cfg.steps + 1)
        );

        let dir = std::env::temp_dir().join("threshold_ou_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("paths.csv");
        std::fs::write(&file, &buf1).unwrap();
        let back = read_path_csv(&file, 1).unwrap();
        assert_eq!(back.values(), paths[1].values());
        assert!((back.dt - paths[1].dt).abs() < 1e-12);
        std::fs::remove_file(&file).ok();
    }

    #[test]
    fn fit_report_json_roundtrip_rescores() {
        let cfg = demo_cfg();
        let spec = SimSpec::new(cfg.params, 100.0, 20_000, Init::Stationary).unwrap();
        let traj = simulate(&spec, &mut RngStream::new(cfg.seed, 0)).unwrap();
        let fit = fit_at_threshold(&traj, cfg.params.threshold, Method::Mle).unwrap();
        let report = FitReport::from_fit(fit).unwrap();
        let json = serde_json::to_string_pretty(&report).unwrap();
        let back: FitReport = serde_json::from_str(&json).unwrap();
        let theta = back.fit.estimate.both().unwrap();
        let rescored =
            crate::estimate::log_likelihood(&back.fit.stats, &theta, &back.fit.sigma).unwrap();
        assert!((rescored - back.loglik).abs() < 1e-9 * back.loglik.abs().max(1.0));
    }

    #[test]
    fn mc_clt_smoke() {
        let cfg = ExperimentConfig {
            params: ModelParams::demo(),
            horizon: 50.0,
            steps: 10_000,
            n_paths: 24,
            seed: 7,
        };
        let report = mc_clt(&cfg, 0.01).unwrap();
        assert_eq!(report.standardized.len() + report.paths_skipped, 24);
        assert_eq!(report.ks.len(), 4);
        let mut csv = Vec::new();
        write_mc_clt_csv(&report, &mut csv).unwrap();
        assert!(csv.starts_with(b"path,za_plus"));
    }

    #[test]
    fn invariant_density_smoke() {
        let cfg = ExperimentConfig {
            params: ModelParams::demo(),
            horizon: 50.0,
            steps: 5_000,
            n_paths: 200,
            seed: 11,
        };
        let report = invariant_density(&cfg, 40).unwrap();
        assert!((report.histogram_mass - 1.0).abs() < 1e-12);
        assert!(report.ks_distance < 0.15);
        assert_eq!(report.bins.len(), 40);
    }

    #[test]
    fn rate_study_reference_row_is_zero() {
        let p = ModelParams::new(
            0.0,
            SidePair::uniform(0.0),
            SidePair::uniform(0.0),
            SidePair::new(1.0, 0.6),
        )
        .unwrap();
        let cfg = RateStudyConfig {
            params: p,
            horizon: 1.0,
            x0: 0.0,
            ladder: vec![1 << 6, 1 << 8, 1 << 12],
            n_ref: 1 << 12,
            n_paths: 10,
            seed: 3,
        };
        let report = rate_study(&cfg).unwrap();
        let last = report.rows.last().unwrap();
        assert_eq!(last.n, 1 << 12);
        assert_eq!(last.mean_local_time_gap, 0.0);
        assert_eq!(last.mean_estimator_gap, Some(0.0));
        // coarser grids drift further from the reference
        assert!(report.rows[0].mean_local_time_gap > report.rows[1].mean_local_time_gap);
        assert!(report.slope_local_time.unwrap() < 0.0);
    }

    #[test]
    fn rate_study_rejects_bad_ladder() {
        let cfg = RateStudyConfig {
            params: ModelParams::demo(),
            horizon: 1.0,
            x0: 0.0,
            ladder: vec![3],
            n_ref: 8,
            n_paths: 1,
            seed: 0,
        };
        assert!(rate_study(&cfg).is_err());
    }

    #[test]
    fn rates_pipeline_on_synthetic_series() {
        // synthesize a plausible rate series from the demo model scaled up
        let params = ModelParams::new(
            3.0,
            SidePair::new(0.05, 0.3),
            SidePair::new(0.2, 0.6),
            SidePair::new(0.4, 0.2),
        )
        .unwrap();
        let spec = SimSpec::new(params, 600.0, 4000, Init::Deterministic(2.0)).unwrap();
        let traj = simulate(&spec, &mut RngStream::new(9, 0)).unwrap();
        let start = chrono::NaiveDate::from_ymd_opt(1990, 1, 1).unwrap();
        let series = RateSeries {
            dates: (0..traj.values().len())
                .map(|i| start + chrono::Days::new(i as u64))
                .collect(),
            values: traj.values().to_vec(),
            dt_months: 0.15,
        };
        let cfg = RatesConfig {
            dt_months: 0.15,
            n_points: 60,
            ..RatesConfig::default()
        };
        let report = rates_pipeline(&series, 0, &cfg).unwrap();
        assert_eq!(report.n_observations, 4001);
        assert!(report.mle.threshold > 0.0);
        assert!(report.qmle.sigma_plus == report.qmle.sigma_minus);
        assert!(report.mle.test.threshold_estimated);
        let tail = RatesConfig {
            tail: Some(1000),
            ..cfg
        };
        let tail_report = rates_pipeline(&series, 0, &tail).unwrap();
        assert_eq!(tail_report.n_observations, 1000);
    }

    #[test]
    fn calibration_runs() {
        let p = ModelParams::new(
            0.0,
            SidePair::uniform(0.1),
            SidePair::uniform(0.0),
            SidePair::uniform(0.01),
        )
        .unwrap();
        let cfg = ExperimentConfig {
            params: p,
            horizon: 50.0,
            steps: 10_000,
            n_paths: 20,
            seed: 40,
        };
        let report = test_calibration(&cfg, 0.95, CalibrationThreshold::Median).unwrap();
        assert_eq!(report.runs + report.skipped, 20);
        assert!(report.rejection_rate <= 1.0);
    }
}
