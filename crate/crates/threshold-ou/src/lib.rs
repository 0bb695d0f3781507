//! Threshold Ornstein-Uhlenbeck (SET Vasicek) diffusions: simulation,
//! closed-form drift (Q)MLE from discrete observations, threshold search,
//! a CLT-based test for the presence of a regime switch, and the Monte
//! Carlo experiment drivers behind the `threshold-ou` binary.
//!
//! The model follows distinct Ornstein-Uhlenbeck dynamics above and below
//! a threshold level; drift and volatility may jump at that level. See the
//! `examples/` directory for one runnable walk-through per capability.

pub mod error;
pub mod estimate;
pub mod experiments;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod numerics;
pub mod series;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use estimate::{
    drift_mle, fit_at_threshold, log_likelihood, percentiles, quasi_likelihood, threshold_search,
    DriftEstimate, DriftParams, FitResult, Method, ThresholdGrid,
};
pub use inference::{confidence_region, gamma_empirical, test_threshold, CovModel, TestResult};
pub use model::{
    classify_regime, gamma_theoretical, qbar_constants, sample_stationary, scale_density,
    speed_density, speed_mass, stationary_dist, AsymptoticConstants, ModelParams, Recurrence,
    RegimeClass, Side, SidePair, StationaryDist,
};
pub use numerics::{
    chi2_quantile, erfc, integrate_halfline, std_normal_cdf, HalfLine, QuadratureSpec,
    RandomSource, RngStream,
};
pub use simulate::{simulate, simulate_batch, Init, SimSpec, Trajectory};
pub use stats::{
    clt_scale_constant, local_time_approx, local_time_scale_constant, sufficient_stats,
    volatility_estimate, SufficientStats,
};
