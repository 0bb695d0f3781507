//! Closed-form drift (Q)MLE at a fixed threshold, likelihood evaluation,
//! and the percentile-grid threshold search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Side, SidePair};
use crate::simulate::Trajectory;
use crate::stats::{
    pooled_volatility, sufficient_stats, volatility_estimate, SufficientStats,
};

/// Which objective scores a candidate threshold. The drift estimates at a
/// fixed threshold are identical under both; only the threshold choice can
/// differ because the full likelihood weighs each side by its estimated
/// volatility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Mle,
    Qmle,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Mle => write!(f, "mle"),
            Method::Qmle => write!(f, "qmle"),
        }
    }
}

/// The four drift parameters (a+, b+, a-, b-) as one value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftParams {
    pub a: SidePair<f64>,
    pub b: SidePair<f64>,
}

impl DriftParams {
    pub fn zero() -> Self {
        DriftParams {
            a: SidePair::uniform(0.0),
            b: SidePair::uniform(0.0),
        }
    }

    /// Vector layout (a+, b+, a-, b-) used by the test and its covariance.
    pub fn to_array(self) -> [f64; 4] {
        [self.a.plus, self.b.plus, self.a.minus, self.b.minus]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        DriftParams {
            a: SidePair::new(v[0], v[2]),
            b: SidePair::new(v[1], v[3]),
        }
    }
}

/// Euclidean distance between two drift 4-vectors.
pub fn drift_gap_norm(a: &DriftParams, b: &DriftParams) -> f64 {
    let u = a.to_array();
    let v = b.to_array();
    (0..4).map(|i| (u[i] - v[i]) * (u[i] - v[i])).sum::<f64>().sqrt()
}

/// One side's closed-form normal-equation solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideEstimate {
    pub a: f64,
    pub b: f64,
    /// Normal-equation determinant q0 q2 - q1^2 backing this side.
    pub det: f64,
}

/// Per-side drift estimates at a fixed threshold; a side with too little
/// or perfectly collinear data carries no estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub threshold: f64,
    pub plus: Option<SideEstimate>,
    pub minus: Option<SideEstimate>,
}

impl DriftEstimate {
    pub fn side(&self, side: Side) -> Result<SideEstimate> {
        let slot = match side {
            Side::Plus => self.plus,
            Side::Minus => self.minus,
        };
        slot.ok_or(Error::DegenerateSide(side))
    }

    /// Both sides, as the 4-vector the inference layer consumes.
    pub fn both(&self) -> Result<DriftParams> {
        let p = self.side(Side::Plus)?;
        let m = self.side(Side::Minus)?;
        Ok(DriftParams {
            a: SidePair::new(p.a, m.a),
            b: SidePair::new(p.b, m.b),
        })
    }
}

/// Relative guard below which a normal-equation determinant counts as
/// degenerate; the closed form is a 2x2 solve and exact degeneracy does
/// happen on finite data (constant side, single visit).
fn det_epsilon(q: &[f64; 3]) -> f64 {
    1e-12 * (q[0] * q[2]).max(1.0)
}

fn estimate_side(stats: &SufficientStats, side: Side) -> Option<SideEstimate> {
    if stats.count[side] < 2 {
        return None;
    }
    let q = &stats.q[side];
    let m = &stats.m[side];
    let det = q[0] * q[2] - q[1] * q[1];
    if det <= det_epsilon(q) {
        return None;
    }
    Some(SideEstimate {
        a: (m[0] * q[1] - q[0] * m[1]) / det,
        b: (m[0] * q[2] - q[1] * m[1]) / det,
        det,
    })
}

/// Closed-form drift estimator from the sufficient statistics. The same
/// point maximizes both the likelihood and the quasi-likelihood, so no
/// method argument is needed here.
pub fn drift_mle(stats: &SufficientStats) -> DriftEstimate {
    DriftEstimate {
        threshold: stats.threshold,
        plus: estimate_side(stats, Side::Plus),
        minus: estimate_side(stats, Side::Minus),
    }
}

/// Quasi-likelihood of the drift parameters given the statistics
/// (volatility held at one on both sides).
pub fn quasi_likelihood(stats: &SufficientStats, theta: &DriftParams) -> f64 {
    Side::BOTH
        .iter()
        .map(|&side| side_objective(stats, theta, side))
        .sum()
}

fn side_objective(stats: &SufficientStats, theta: &DriftParams, side: Side) -> f64 {
    let q = &stats.q[side];
    let m = &stats.m[side];
    let a = theta.a[side];
    let b = theta.b[side];
    b * m[0] - a * m[1] - 0.5 * (b * b * q[0] + a * a * q[2] - 2.0 * a * b * q[1])
}

/// Log-likelihood: the per-side quasi-likelihood terms weighted by the
/// reciprocal squared volatilities.
pub fn log_likelihood(
    stats: &SufficientStats,
    theta: &DriftParams,
    sigma: &SidePair<f64>,
) -> Result<f64> {
    for side in Side::BOTH {
        if !(sigma[side] > 0.0) || !sigma[side].is_finite() {
            return Err(Error::InvalidInput(format!(
                "sigma on the {side} side must be positive"
            )));
        }
    }
    Ok(Side::BOTH
        .iter()
        .map(|&side| side_objective(stats, theta, side) / (sigma[side] * sigma[side]))
        .sum())
}

/// Full result of a fit: drift block, volatilities, both objective values
/// and the statistics they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: Method,
    pub threshold: f64,
    /// Whether the threshold was picked by a grid search (relevant when
    /// interpreting the test downstream).
    pub threshold_searched: bool,
    pub estimate: DriftEstimate,
    /// Per-side volatility estimates; the quasi route reports the pooled
    /// value in both slots.
    pub sigma: SidePair<f64>,
    /// Log-likelihood of the drift block under `sigma`.
    pub loglik: f64,
    /// Quasi-likelihood of the drift block.
    pub quasi_lik: f64,
    pub stats: SufficientStats,
}

impl FitResult {
    /// Mean-reversion level b/a of one side; None when the side is missing
    /// or its rate is numerically zero.
    pub fn reversion_level(&self, side: Side) -> Option<f64> {
        let est = self.estimate.side(side).ok()?;
        if est.a.abs() < 1e-12 {
            None
        } else {
            Some(est.b / est.a)
        }
    }
}

fn fit_from_stats(stats: SufficientStats, method: Method, searched: bool) -> Result<FitResult> {
    let estimate = drift_mle(&stats);
    let theta = estimate.both()?;
    let sigma = match method {
        Method::Mle => volatility_estimate(&stats)?,
        Method::Qmle => SidePair::uniform(pooled_volatility(&stats)),
    };
    let loglik = log_likelihood(&stats, &theta, &sigma)?;
    let quasi_lik = quasi_likelihood(&stats, &theta);
    Ok(FitResult {
        method,
        threshold: stats.threshold,
        threshold_searched: searched,
        estimate,
        sigma,
        loglik,
        quasi_lik,
        stats,
    })
}

/// Fit drift and volatility with the threshold held fixed.
pub fn fit_at_threshold(traj: &Trajectory, threshold: f64, method: Method) -> Result<FitResult> {
    fit_from_stats(sufficient_stats(traj, threshold), method, false)
}

/// Empirical nearest-rank percentiles (c, d) at levels delta and 1 - delta.
pub fn percentiles(traj: &Trajectory, delta: f64) -> Result<(f64, f64)> {
    if !(0.0 < delta && delta < 0.5) {
        return Err(Error::InvalidInput(format!(
            "delta must lie in (0, 0.5), got {delta}"
        )));
    }
    let mut sorted = traj.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nearest_rank = |p: f64| -> f64 {
        let n = sorted.len();
        let rank = (p * n as f64).ceil() as usize;
        sorted[rank.clamp(1, n) - 1]
    };
    Ok((nearest_rank(delta), nearest_rank(1.0 - delta)))
}

/// Candidate thresholds: a uniform grid between the delta and 1 - delta
/// percentiles of the observed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub delta: f64,
    pub candidates: Vec<f64>,
}

impl ThresholdGrid {
    pub const DEFAULT_DELTA: f64 = 0.15;
    pub const DEFAULT_POINTS: usize = 200;

    /// Build the grid from a trajectory. Errors when the percentile window
    /// touches the data extremes (degenerate or far too short samples).
    pub fn from_trajectory(traj: &Trajectory, delta: f64, n_points: usize) -> Result<Self> {
        if n_points == 0 {
            return Err(Error::InvalidInput("n_points must be at least 1".into()));
        }
        let (c, d) = percentiles(traj, delta)?;
        let min = traj.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = traj
            .values()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if !(c > min && d < max) {
            return Err(Error::InvalidInput(
                "percentile window reaches the data range; not enough spread".into(),
            ));
        }
        let candidates = if n_points == 1 || d == c {
            vec![c]
        } else {
            let step = (d - c) / (n_points - 1) as f64;
            (0..n_points).map(|i| c + step * i as f64).collect()
        };
        Ok(ThresholdGrid { delta, candidates })
    }

    /// A one-candidate grid holding a fixed threshold.
    pub fn single(threshold: f64) -> Self {
        ThresholdGrid {
            delta: 0.0,
            candidates: vec![threshold],
        }
    }
}

/// Score every candidate threshold and return the best fit. Candidates
/// that leave either side degenerate are skipped; exact score ties go to
/// the smallest candidate.
pub fn threshold_search(
    traj: &Trajectory,
    grid: &ThresholdGrid,
    method: Method,
) -> Result<FitResult> {
    let mut best: Option<FitResult> = None;
    let mut best_score = f64::NEG_INFINITY;
    let mut sorted = grid.candidates.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &r in &sorted {
        let stats = sufficient_stats(traj, r);
        let fit = match fit_from_stats(stats, method, true) {
            Ok(fit) => fit,
            Err(Error::DegenerateSide(_)) | Err(Error::SideUnvisited(_)) => continue,
            Err(e) => return Err(e),
        };
        let score = match method {
            Method::Mle => fit.loglik,
            Method::Qmle => fit.quasi_lik,
        };
        if score > best_score {
            best_score = score;
            best = Some(fit);
        }
    }
    let mut fit = best.ok_or(Error::NoValidCandidate)?;
    fit.threshold_searched = grid.candidates.len() > 1;
    Ok(fit)
}
