//! Discrete sufficient statistics of a trajectory at a given threshold:
//! per-side occupation and increment moment sums, the crossing-based local
//! time approximation, and the realized-variance volatility estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, Side, SidePair};
use crate::numerics::KahanSum;
use crate::simulate::Trajectory;

/// All sums the estimators need, computed in one pass.
///
/// Conventions: the left endpoint of each increment decides the side; the
/// plus side includes the threshold point; a crossing requires a strict
/// sign change, so a grid value exactly at the threshold never produces a
/// crossing term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub threshold: f64,
    /// Observation horizon T = N dt.
    pub horizon: f64,
    /// Number of increments N.
    pub n: usize,
    pub dt: f64,
    /// q[side][m] = dt * sum of X_k^m over left endpoints on the side,
    /// m = 0, 1, 2.
    pub q: SidePair<[f64; 3]>,
    /// m[side][m] = sum of X_k^m (X_{k+1} - X_k) over left endpoints on
    /// the side, m = 0, 1.
    pub m: SidePair<[f64; 2]>,
    /// Crossing local-time approximation 2 sum |X_{k+1} - r| over sign
    /// changes.
    pub local_time: f64,
    /// Number of strict sign changes of X - r.
    pub crossings: usize,
    /// Realized variance sum of (X_{k+1} - X_k)^2 per side.
    pub sumsq: SidePair<f64>,
    /// Left-endpoint count per side.
    pub count: SidePair<usize>,
}

/// One O(N) pass over the trajectory with compensated accumulators.
pub fn sufficient_stats(traj: &Trajectory, threshold: f64) -> SufficientStats {
    let xs = traj.values();
    let n = traj.n_increments();
    let dt = traj.dt;

    let mut q1 = SidePair::uniform(KahanSum::new());
    let mut q2 = SidePair::uniform(KahanSum::new());
    let mut m0 = SidePair::uniform(KahanSum::new());
    let mut m1 = SidePair::uniform(KahanSum::new());
    let mut sumsq = SidePair::uniform(KahanSum::new());
    let mut count = SidePair::uniform(0usize);
    let mut local = KahanSum::new();
    let mut crossings = 0usize;

    for k in 0..n {
        let x = xs[k];
        let x_next = xs[k + 1];
        let dx = x_next - x;
        let side = Side::of(x, threshold);
        count[side] += 1;
        q1[side].add(x);
        q2[side].add(x * x);
        m0[side].add(dx);
        m1[side].add(x * dx);
        sumsq[side].add(dx * dx);
        if (x - threshold) * (x_next - threshold) < 0.0 {
            crossings += 1;
            local.add((x_next - threshold).abs());
        }
    }

    let q = SidePair::new(
        [
            dt * count.plus as f64,
            dt * q1.plus.value(),
            dt * q2.plus.value(),
        ],
        [
            dt * count.minus as f64,
            dt * q1.minus.value(),
            dt * q2.minus.value(),
        ],
    );
    let m = SidePair::new(
        [m0.plus.value(), m1.plus.value()],
        [m0.minus.value(), m1.minus.value()],
    );

    SufficientStats {
        threshold,
        horizon: dt * n as f64,
        n,
        dt,
        q,
        m,
        local_time: 2.0 * local.value(),
        crossings,
        sumsq: SidePair::new(sumsq.plus.value(), sumsq.minus.value()),
        count,
    }
}

/// Crossing-based local time approximation at level `threshold`:
/// 2 sum |X_{k+1} - r| over strict sign changes. Needs no knowledge of
/// the volatility.
pub fn local_time_approx(traj: &Trajectory, threshold: f64) -> f64 {
    let xs = traj.values();
    let mut local = KahanSum::new();
    for k in 0..traj.n_increments() {
        if (xs[k] - threshold) * (xs[k + 1] - threshold) < 0.0 {
            local.add((xs[k + 1] - threshold).abs());
        }
    }
    2.0 * local.value()
}

/// Realized-variance volatility estimates: sigma^2 per side is the side's
/// squared-increment sum over its occupation time.
pub fn volatility_estimate(stats: &SufficientStats) -> Result<SidePair<f64>> {
    for side in Side::BOTH {
        if stats.count[side] == 0 {
            return Err(Error::SideUnvisited(side));
        }
    }
    Ok(SidePair::new(
        (stats.sumsq.plus / stats.q.plus[0]).sqrt(),
        (stats.sumsq.minus / stats.q.minus[0]).sqrt(),
    ))
}

/// Volatility estimate for a single side.
pub fn volatility_estimate_side(stats: &SufficientStats, side: Side) -> Result<f64> {
    if stats.count[side] == 0 {
        return Err(Error::SideUnvisited(side));
    }
    Ok((stats.sumsq[side] / stats.q[side][0]).sqrt())
}

/// Pooled volatility assuming one sigma on both sides (the convention the
/// quasi-likelihood route reports).
pub fn pooled_volatility(stats: &SufficientStats) -> f64 {
    ((stats.sumsq.plus + stats.sumsq.minus) / (stats.q.plus[0] + stats.q.minus[0])).sqrt()
}

/// Scale constant of the high-frequency estimator fluctuation:
/// sqrt( 4/(3 sqrt(2 pi)) * (sigma-^2 + sigma+^2)/(sigma- + sigma+) ).
pub fn clt_scale_constant(p: &ModelParams) -> f64 {
    scale_constant(p, 4.0)
}

/// Same constant with 16 in place of 4: the local-time discretization
/// fluctuation scale.
pub fn local_time_scale_constant(p: &ModelParams) -> f64 {
    scale_constant(p, 16.0)
}

fn scale_constant(p: &ModelParams, numerator: f64) -> f64 {
    let (sp, sm) = (p.sigma.plus, p.sigma.minus);
    (numerator / (3.0 * (2.0 * std::f64::consts::PI).sqrt()) * (sm * sm + sp * sp) / (sm + sp))
        .sqrt()
}
