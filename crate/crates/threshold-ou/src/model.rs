//! The threshold Ornstein-Uhlenbeck model: coefficients, regime
//! classification, scale/speed machinery, the stationary distribution and
//! the long-run occupation constants behind the estimator CLT.
//!
//! The process follows dX = (b(X) - a(X) X) dt + sigma(X) dW with one
//! coefficient set on each side of a threshold r. The "plus" side is
//! x >= r, the "minus" side x < r; that convention is applied everywhere
//! in the crate so the threshold point is never double counted.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::numerics::{ln_erfcx, RandomSource};

/// Which half-line a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Plus, Side::Minus];

    /// Side of `x` relative to threshold `r`; the threshold itself counts
    /// as plus.
    #[inline]
    pub fn of(x: f64, r: f64) -> Side {
        if x >= r {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    /// +1 for plus, -1 for minus; the sign that shows up in the closed
    /// forms below.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Plus => write!(f, "plus"),
            Side::Minus => write!(f, "minus"),
        }
    }
}

/// A pair of values indexed by [`Side`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidePair<T> {
    pub plus: T,
    pub minus: T,
}

impl<T> SidePair<T> {
    pub fn new(plus: T, minus: T) -> Self {
        SidePair { plus, minus }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> SidePair<U> {
        SidePair {
            plus: f(&self.plus),
            minus: f(&self.minus),
        }
    }
}

impl<T: Copy> SidePair<T> {
    pub fn uniform(v: T) -> Self {
        SidePair { plus: v, minus: v }
    }
}

impl<T> Index<Side> for SidePair<T> {
    type Output = T;
    fn index(&self, side: Side) -> &T {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }
}

impl<T> IndexMut<Side> for SidePair<T> {
    fn index_mut(&mut self, side: Side) -> &mut T {
        match side {
            Side::Plus => &mut self.plus,
            Side::Minus => &mut self.minus,
        }
    }
}

/// Full coefficient set of the SDE: threshold r, mean-reversion rates a,
/// drift intercepts b and volatilities sigma per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub threshold: f64,
    pub a: SidePair<f64>,
    pub b: SidePair<f64>,
    pub sigma: SidePair<f64>,
}

impl ModelParams {
    pub fn new(
        threshold: f64,
        a: SidePair<f64>,
        b: SidePair<f64>,
        sigma: SidePair<f64>,
    ) -> Result<Self> {
        for side in Side::BOTH {
            if !(sigma[side] > 0.0) || !sigma[side].is_finite() {
                return Err(Error::InvalidInput(format!(
                    "sigma on the {side} side must be positive and finite"
                )));
            }
            if !a[side].is_finite() || !b[side].is_finite() {
                return Err(Error::InvalidInput(format!(
                    "drift coefficients on the {side} side must be finite"
                )));
            }
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidInput("threshold must be finite".into()));
        }
        Ok(ModelParams {
            threshold,
            a,
            b,
            sigma,
        })
    }

    /// Two-regime demo parameter set with a mildly bimodal stationary law;
    /// used as the default by the CLI and the examples.
    pub fn demo() -> Self {
        ModelParams {
            threshold: 0.01,
            a: SidePair::new(0.11, 0.1),
            b: SidePair::new(0.003, -0.002),
            sigma: SidePair::new(0.01, 0.011),
        }
    }

    #[inline]
    pub fn side_of(&self, x: f64) -> Side {
        Side::of(x, self.threshold)
    }

    /// Total drift b(x) - a(x) x.
    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        let s = self.side_of(x);
        self.b[s] - self.a[s] * x
    }

    #[inline]
    pub fn vol(&self, x: f64) -> f64 {
        self.sigma[self.side_of(x)]
    }

    /// Mean-reversion level b/a of one side, when the rate is nonzero.
    pub fn reversion_level(&self, side: Side) -> Option<f64> {
        if self.a[side].abs() > 0.0 {
            Some(self.b[side] / self.a[side])
        } else {
            None
        }
    }
}

// ---------------------------------------------------------------------------
// Regime classification.
// ---------------------------------------------------------------------------

/// Per-side behaviour of the drift at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideBehavior {
    /// The scale function diverges and the side's speed mass is finite.
    Confining,
    /// Driftless side: recurrent but with infinite speed mass.
    Neutral,
    /// The process can escape through this side.
    Escaping,
}

/// Overall recurrence class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recurrence {
    Ergodic,
    NullRecurrent,
    Transient,
}

/// Classification of a parameter set, overall and per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeClass {
    pub overall: Recurrence,
    pub side_plus: SideBehavior,
    pub side_minus: SideBehavior,
}

fn side_behavior(a: f64, b: f64, side: Side) -> SideBehavior {
    // confining means the drift pulls back from the side's infinity:
    // a > 0, or a = 0 with b pointing strictly inward
    if a > 0.0 {
        SideBehavior::Confining
    } else if a == 0.0 {
        let inward = match side {
            Side::Plus => b < 0.0,
            Side::Minus => b > 0.0,
        };
        if inward {
            SideBehavior::Confining
        } else if b == 0.0 {
            SideBehavior::Neutral
        } else {
            SideBehavior::Escaping
        }
    } else {
        SideBehavior::Escaping
    }
}

/// Classify the recurrence regime of a parameter set.
///
/// Ergodic iff both sides are confining; transient as soon as one side is
/// escaping (drift pointing outward, or any a < 0); null recurrent in the
/// boundary case of a driftless side.
pub fn classify_regime(p: &ModelParams) -> RegimeClass {
    let side_plus = side_behavior(p.a.plus, p.b.plus, Side::Plus);
    let side_minus = side_behavior(p.a.minus, p.b.minus, Side::Minus);
    let overall = if side_plus == SideBehavior::Escaping || side_minus == SideBehavior::Escaping {
        Recurrence::Transient
    } else if side_plus == SideBehavior::Confining && side_minus == SideBehavior::Confining {
        Recurrence::Ergodic
    } else {
        Recurrence::NullRecurrent
    };
    RegimeClass {
        overall,
        side_plus,
        side_minus,
    }
}

// ---------------------------------------------------------------------------
// Scale density, speed density, speed masses.
// ---------------------------------------------------------------------------

/// log of the scale density s(x).
fn log_scale_density(p: &ModelParams, x: f64) -> f64 {
    let s = p.side_of(x);
    let r = p.threshold;
    -(x - r) * (2.0 * p.b[s] - p.a[s] * (x + r)) / (p.sigma[s] * p.sigma[s])
}

/// Scale density s(x) = exp(-(x-r)(2b - a(x+r))/sigma^2), sides chosen by
/// x >= r / x < r. Equals 1 at the threshold.
pub fn scale_density(p: &ModelParams, x: f64) -> f64 {
    log_scale_density(p, x).exp()
}

/// log of the speed density m(x).
pub fn log_speed_density(p: &ModelParams, x: f64) -> f64 {
    let s = p.side_of(x);
    (2.0 / (p.sigma[s] * p.sigma[s])).ln() - log_scale_density(p, x)
}

/// Speed density m(x) = 2 / (sigma(x)^2 s(x)).
pub fn speed_density(p: &ModelParams, x: f64) -> f64 {
    log_speed_density(p, x).exp()
}

/// log of the one-sided speed-measure mass, or +inf when the mass
/// diverges (driftless side).
fn log_speed_mass(p: &ModelParams, side: Side) -> f64 {
    let a = p.a[side];
    let b = p.b[side];
    let sigma = p.sigma[side];
    let r = p.threshold;
    if a > 0.0 {
        // sqrt(pi)/(sigma sqrt(a)) * exp(t^2) * erfc(-sign * t),
        // t = sqrt(a)/sigma (b/a - r); evaluated through erfcx so the
        // exponential never overflows on its own
        let t = a.sqrt() / sigma * (b / a - r);
        0.5 * std::f64::consts::PI.ln() - sigma.ln() - 0.5 * a.ln() + ln_erfcx(-side.sign() * t)
    } else if a == 0.0 {
        let inward = match side {
            Side::Plus => b < 0.0,
            Side::Minus => b > 0.0,
        };
        if inward {
            -b.abs().ln()
        } else {
            f64::INFINITY
        }
    } else {
        f64::INFINITY
    }
}

/// Total speed-measure mass of one side: finite closed form for confining
/// sides, +inf otherwise.
pub fn speed_mass(p: &ModelParams, side: Side) -> f64 {
    log_speed_mass(p, side).exp()
}

// ---------------------------------------------------------------------------
// Stationary distribution.
// ---------------------------------------------------------------------------

/// Sampler descriptor for one side of the stationary law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SideLaw {
    /// Gaussian with the given center and scale, truncated to the side's
    /// half-line (a > 0).
    TruncatedGaussian { center: f64, scale: f64 },
    /// |X - r| is exponential with the given rate (a = 0, inward drift).
    ShiftedExponential { rate: f64 },
}

/// The stationary distribution: the renormalized speed measure. Only
/// constructible for ergodic parameter sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDist {
    params: ModelParams,
    /// Per-side speed masses (may be +inf-free by construction).
    pub mass: SidePair<f64>,
    log_mass: SidePair<f64>,
    log_total_mass: f64,
    /// Probability that a stationary draw lands on the plus side.
    pub weight_plus: f64,
    /// Per-side sampler descriptors.
    pub law: SidePair<SideLaw>,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Build the stationary distribution of an ergodic parameter set.
pub fn stationary_dist(p: &ModelParams) -> Result<StationaryDist> {
    if classify_regime(p).overall != Recurrence::Ergodic {
        return Err(Error::NotErgodic);
    }
    let log_mass = SidePair::new(
        log_speed_mass(p, Side::Plus),
        log_speed_mass(p, Side::Minus),
    );
    let log_total = log_add_exp(log_mass.plus, log_mass.minus);
    let weight_plus = (log_mass.plus - log_total).exp();
    let law = SidePair::new(side_law(p, Side::Plus), side_law(p, Side::Minus));
    Ok(StationaryDist {
        params: *p,
        mass: log_mass.map(|lm| lm.exp()),
        log_mass,
        log_total_mass: log_total,
        weight_plus,
        law,
    })
}

fn side_law(p: &ModelParams, side: Side) -> SideLaw {
    let a = p.a[side];
    if a > 0.0 {
        SideLaw::TruncatedGaussian {
            center: p.b[side] / a,
            scale: p.sigma[side] / (2.0 * a).sqrt(),
        }
    } else {
        SideLaw::ShiftedExponential {
            rate: 2.0 * p.b[side].abs() / (p.sigma[side] * p.sigma[side]),
        }
    }
}

impl StationaryDist {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Stationary density at x.
    pub fn density(&self, x: f64) -> f64 {
        (log_speed_density(&self.params, x) - self.log_total_mass).exp()
    }

    /// Stationary CDF at x, assembled from the per-side closed forms.
    pub fn cdf(&self, x: f64) -> f64 {
        let r = self.params.threshold;
        if x < r {
            // everything on the minus side further from r than x
            let w_minus = 1.0 - self.weight_plus;
            w_minus * (1.0 - self.side_cdf_fraction(Side::Minus, x))
        } else {
            1.0 - self.weight_plus * (1.0 - self.side_cdf_fraction(Side::Plus, x))
        }
    }

    /// Fraction of the side's own mass lying between the threshold and x
    /// (x on that side), i.e. the side-conditional CDF measured from r.
    fn side_cdf_fraction(&self, side: Side, x: f64) -> f64 {
        let r = self.params.threshold;
        match self.law[side] {
            SideLaw::ShiftedExponential { rate } => {
                // distance from the threshold is exponential
                1.0 - (-rate * (x - r).abs()).exp()
            }
            SideLaw::TruncatedGaussian { center, scale } => {
                // mass between r and x over the side's total Gaussian mass,
                // computed through erfcx for far-tail stability
                let zr = side.sign() * (r - center) / scale;
                let zx = side.sign() * (x - center) / scale;
                debug_assert!(zx >= zr - 1e-12);
                let sqrt2 = std::f64::consts::SQRT_2;
                // tail(z) = P(Z >= z) = erfc(z/sqrt2)/2; fraction = 1 - tail(zx)/tail(zr)
                let lr = -0.5 * zr * zr + ln_erfcx(zr / sqrt2);
                let lx = -0.5 * zx * zx + ln_erfcx(zx / sqrt2);
                1.0 - (lx - lr).exp()
            }
        }
    }

    /// Draw one exact sample.
    pub fn sample(&self, rng: &mut impl RandomSource) -> f64 {
        let side = if rng.uniform() <= self.weight_plus {
            Side::Plus
        } else {
            Side::Minus
        };
        self.sample_side(side, rng)
    }

    fn sample_side(&self, side: Side, rng: &mut impl RandomSource) -> f64 {
        let r = self.params.threshold;
        match self.law[side] {
            SideLaw::ShiftedExponential { rate } => {
                let e = -rng.uniform().ln() / rate;
                r + side.sign() * e
            }
            SideLaw::TruncatedGaussian { center, scale } => loop {
                // rejection from the untruncated Gaussian; the acceptance
                // probability equals the side's Gaussian mass, which is
                // bounded away from zero whenever this side carries any
                // appreciable stationary weight
                let x = center + scale * rng.standard_normal();
                let ok = match side {
                    Side::Plus => x >= r,
                    Side::Minus => x < r,
                };
                if ok {
                    return x;
                }
            },
        }
    }
}

/// Draw one sample from the stationary distribution.
pub fn sample_stationary(d: &StationaryDist, rng: &mut impl RandomSource) -> f64 {
    d.sample(rng)
}

// ---------------------------------------------------------------------------
// Long-run occupation constants and information matrices.
// ---------------------------------------------------------------------------

/// The long-run constants of the model: occupation moments, per-side
/// information matrices, their CLT covariances and the 4x4 Fisher matrix in
/// the (a+, b+, a-, b-) ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    /// qbar[side][i]: almost-sure limit of the occupation moment sums
    /// Q^{side,i}_T / T for i = 0, 1, 2.
    pub qbar: SidePair<[f64; 3]>,
    /// Per-side information matrices [[q2, -q1], [-q1, q0]].
    pub gamma: SidePair<Mat2>,
    /// Per-side CLT covariances sigma^2 Gamma^{-1}.
    pub clt_cov: SidePair<Mat2>,
    /// Block-diagonal Fisher information blockdiag(Gamma+/sigma+^2,
    /// Gamma-/sigma-^2).
    pub fisher: [[f64; 4]; 4],
}

/// The six long-run occupation moments, via the case-split closed forms
/// (a > 0 and confining a = 0 sides combine freely).
pub fn qbar_constants(p: &ModelParams) -> Result<SidePair<[f64; 3]>> {
    if classify_regime(p).overall != Recurrence::Ergodic {
        return Err(Error::NotErgodic);
    }
    let log_mass = SidePair::new(
        log_speed_mass(p, Side::Plus),
        log_speed_mass(p, Side::Minus),
    );
    let log_total = log_add_exp(log_mass.plus, log_mass.minus);
    let mut out = SidePair::uniform([0.0; 3]);
    for side in Side::BOTH {
        let a = p.a[side];
        let b = p.b[side];
        let sigma = p.sigma[side];
        let r = p.threshold;
        let sign = side.sign();
        // weight of this side and the reciprocal total mass
        let w = (log_mass[side] - log_total).exp();
        let inv_total = (-log_total).exp();
        let q = if a > 0.0 {
            let level = b / a;
            [
                w,
                level * w + sign * inv_total / a,
                (level * level + sigma * sigma / (2.0 * a)) * w
                    + sign * (level + r) * inv_total / a,
            ]
        } else {
            // confining driftless side: |X - r| is exponential with mean
            // sigma^2 n0 / 2 where n0 = 1/|b|
            let n0 = 1.0 / b.abs();
            let s2n = sigma * sigma * n0;
            [
                w,
                w * (r + sign * 0.5 * s2n),
                w * (r * r + sign * r * s2n + 0.5 * s2n * s2n),
            ]
        };
        out[side] = q;
    }
    Ok(out)
}

/// Assemble the information matrices and CLT covariances from the
/// occupation constants.
pub fn gamma_theoretical(p: &ModelParams) -> Result<AsymptoticConstants> {
    let qbar = qbar_constants(p)?;
    let gamma = qbar.map(|q| Mat2::new(q[2], -q[1], -q[1], q[0]));
    let mut clt_cov = SidePair::uniform(Mat2::identity());
    for side in Side::BOTH {
        let s2 = p.sigma[side] * p.sigma[side];
        clt_cov[side] = gamma[side].inverse()?.scale(s2);
    }
    let mut fisher = [[0.0; 4]; 4];
    for side in Side::BOTH {
        let s2 = p.sigma[side] * p.sigma[side];
        let g = gamma[side];
        let off = match side {
            Side::Plus => 0,
            Side::Minus => 2,
        };
        for i in 0..2 {
            for j in 0..2 {
                fisher[off + i][off + j] = g.0[i][j] / s2;
            }
        }
    }
    Ok(AsymptoticConstants {
        qbar,
        gamma,
        clt_cov,
        fisher,
    })
}
