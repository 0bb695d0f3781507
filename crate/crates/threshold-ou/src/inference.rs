//! Asymptotic covariance estimation, the CLT confidence ellipsoid, and the
//! heuristic no-threshold test.
//!
//! The null hypothesis is one single regime, (a+, b+) = (a-, b-). The test
//! rejects when the confidence ellipsoid of the estimated 4-vector misses
//! the null subspace {v1 = v3, v2 = v4}; geometrically that is exactly
//! "minimal Mahalanobis distance to the subspace exceeds the chi-square
//! radius", which is what gets computed here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{DriftParams, FitResult};
use crate::linalg::Mat2;
use crate::model::{Side, SidePair};
use crate::numerics::chi2_quantile;
use crate::stats::SufficientStats;

/// Estimated covariance model of the drift-estimate 4-vector
/// (a+, b+, a-, b-).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovModel {
    /// Riemann-sum information matrices [[q2, -q1], [-q1, q0]] / T.
    pub gamma_hat: SidePair<Mat2>,
    pub sigma_hat: SidePair<f64>,
    pub horizon: f64,
    /// Block-diagonal covariance blockdiag(s+^2 G+^-1, s-^2 G-^-1) / T.
    pub cov4: [[f64; 4]; 4],
}

/// Per-side empirical information matrices from the occupation sums.
pub fn gamma_empirical(stats: &SufficientStats) -> Result<SidePair<Mat2>> {
    let mut out = SidePair::uniform(Mat2::identity());
    for side in Side::BOTH {
        if stats.count[side] < 2 {
            return Err(Error::DegenerateSide(side));
        }
        let q = &stats.q[side];
        let t = stats.horizon;
        let g = Mat2::new(q[2] / t, -q[1] / t, -q[1] / t, q[0] / t);
        if g.det() <= 0.0 {
            return Err(Error::DegenerateSide(side));
        }
        out[side] = g;
    }
    Ok(out)
}

impl CovModel {
    /// Build the covariance model carried by a fit.
    pub fn from_fit(fit: &FitResult) -> Result<CovModel> {
        let gamma_hat = gamma_empirical(&fit.stats)?;
        let t = fit.stats.horizon;
        let mut cov4 = [[0.0; 4]; 4];
        for side in Side::BOTH {
            let s2 = fit.sigma[side] * fit.sigma[side];
            let block = gamma_hat[side].inverse()?.scale(s2 / t);
            let off = match side {
                Side::Plus => 0,
                Side::Minus => 2,
            };
            for i in 0..2 {
                for j in 0..2 {
                    cov4[off + i][off + j] = block.0[i][j];
                }
            }
        }
        Ok(CovModel {
            gamma_hat,
            sigma_hat: fit.sigma,
            horizon: t,
            cov4,
        })
    }

    /// Per-side precision matrices T Gamma / sigma^2 (inverse covariance).
    fn precision(&self, side: Side) -> Mat2 {
        let s2 = self.sigma_hat[side] * self.sigma_hat[side];
        self.gamma_hat[side].scale(self.horizon / s2)
    }
}

/// The confidence ellipsoid around the fitted 4-vector: the set
/// center + shape z over the unit ball |z| <= 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegion {
    pub p: f64,
    /// sqrt of the chi-square(4) quantile at p.
    pub q_p: f64,
    pub center: [f64; 4],
    /// (q_p / sqrt(T)) blockdiag(s+ U+, s- U-) with U U' = Gamma^-1.
    pub shape: [[f64; 4]; 4],
}

/// Ellipsoid of confidence level `p` for the drift 4-vector.
pub fn confidence_region(fit: &FitResult, p: f64) -> Result<ConfidenceRegion> {
    let cov = CovModel::from_fit(fit)?;
    let q_p = chi2_quantile(p, 4)?.sqrt();
    let theta = fit.estimate.both()?.to_array();
    let mut shape = [[0.0; 4]; 4];
    let scale = q_p / cov.horizon.sqrt();
    for side in Side::BOTH {
        let u = cov.gamma_hat[side].inverse()?.cholesky()?;
        let off = match side {
            Side::Plus => 0,
            Side::Minus => 2,
        };
        for i in 0..2 {
            for j in 0..2 {
                shape[off + i][off + j] = scale * cov.sigma_hat[side] * u.0[i][j];
            }
        }
    }
    Ok(ConfidenceRegion {
        p,
        q_p,
        center: theta,
        shape,
    })
}

/// Axis-aligned projection of the confidence ellipsoid onto one pair of
/// matched coordinates, for plotting; purely diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneEllipse {
    /// (plus-side, minus-side) coordinate of the center.
    pub center: [f64; 2],
    /// Semi-axis lengths along the two coordinates.
    pub semi_axes: [f64; 2],
    /// Whether the projection intersects the diagonal x = y.
    pub crosses_diagonal: bool,
}

impl PlaneEllipse {
    fn new(center: [f64; 2], semi_axes: [f64; 2]) -> Self {
        // the projection {c + (s1 w1, s2 w2): |w| <= 1} meets {x = y} iff
        // |c1 - c2| <= sqrt(s1^2 + s2^2)
        let crosses = (center[0] - center[1]).abs() <= semi_axes[0].hypot(semi_axes[1]);
        PlaneEllipse {
            center,
            semi_axes,
            crosses_diagonal: crosses,
        }
    }
}

/// Outcome of the single-regime test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub p: f64,
    pub q_p: f64,
    /// Minimal Mahalanobis distance from the fitted 4-vector to the null
    /// subspace.
    pub min_mahalanobis: f64,
    pub reject: bool,
    /// The closest point (u1, u2, u1, u2) of the null subspace.
    pub nearest_null_point: [f64; 4],
    /// Projection onto the (a+, a-) plane.
    pub ellipse_a: PlaneEllipse,
    /// Projection onto the (b+, b-) plane.
    pub ellipse_b: PlaneEllipse,
    /// Propagated from the fit: the threshold was itself estimated, so the
    /// test is conditional on that selection.
    pub threshold_estimated: bool,
}

/// Minimal Mahalanobis distance to {v1 = v3, v2 = v4} given per-side
/// precision matrices, plus the minimizer. The subspace point (u, u)
/// solves the stationarity condition (P+ + P-) u = P+ t+ + P- t-.
pub fn min_distance_to_null(
    theta: &DriftParams,
    precision: &SidePair<Mat2>,
) -> Result<(f64, [f64; 2])> {
    let tp = [theta.a.plus, theta.b.plus];
    let tm = [theta.a.minus, theta.b.minus];
    let pp = precision.plus;
    let pm = precision.minus;
    let lhs = pp.add(&pm);
    let rp = pp.mul_vec(tp);
    let rm = pm.mul_vec(tm);
    let u = lhs.solve([rp[0] + rm[0], rp[1] + rm[1]])?;
    let dp = [tp[0] - u[0], tp[1] - u[1]];
    let dm = [tm[0] - u[0], tm[1] - u[1]];
    let d2 = pp.quad_form(dp) + pm.quad_form(dm);
    Ok((d2.max(0.0).sqrt(), u))
}

/// Test the single-regime null at confidence level `p`.
pub fn test_threshold(fit: &FitResult, p: f64) -> Result<TestResult> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::InvalidInput(format!(
            "confidence level must lie in (0,1), got {p}"
        )));
    }
    let cov = CovModel::from_fit(fit)?;
    let theta = fit.estimate.both()?;
    let q_p = chi2_quantile(p, 4)?.sqrt();
    let precision = SidePair::new(cov.precision(Side::Plus), cov.precision(Side::Minus));
    // guard: the distance needs invertible precisions
    for side in Side::BOTH {
        if precision[side].det() <= 0.0 {
            return Err(Error::SingularMatrix);
        }
    }
    let (distance, u) = min_distance_to_null(&theta, &precision)?;

    // marginal plane projections of the q_p-ellipsoid; cov4 is block
    // diagonal so both marginals are axis aligned
    let ellipse_a = PlaneEllipse::new(
        [theta.a.plus, theta.a.minus],
        [
            q_p * cov.cov4[0][0].sqrt(),
            q_p * cov.cov4[2][2].sqrt(),
        ],
    );
    let ellipse_b = PlaneEllipse::new(
        [theta.b.plus, theta.b.minus],
        [
            q_p * cov.cov4[1][1].sqrt(),
            q_p * cov.cov4[3][3].sqrt(),
        ],
    );

    Ok(TestResult {
        p,
        q_p,
        min_mahalanobis: distance,
        reject: distance > q_p,
        nearest_null_point: [u[0], u[1], u[0], u[1]],
        ellipse_a,
        ellipse_b,
        threshold_estimated: fit.threshold_searched,
    })
}
