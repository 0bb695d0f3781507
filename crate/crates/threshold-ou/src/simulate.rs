//! Euler-Maruyama simulation of the threshold OU SDE on a uniform grid,
//! with exact stationary initialization and reproducible Monte Carlo
//! batches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{stationary_dist, ModelParams};
use crate::numerics::{RandomSource, RngStream};

/// Hard guard against explosive parameter sets.
const DIVERGENCE_BOUND: f64 = 1e12;

/// A uniformly sampled path: values at times t0 + k dt, k = 0..=N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput("dt must be positive".into()));
        }
        if values.len() < 2 {
            return Err(Error::InvalidInput(
                "a trajectory needs at least two points".into(),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(Trajectory { t0, dt, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of increments N (one less than the number of points).
    pub fn n_increments(&self) -> usize {
        self.values.len() - 1
    }

    /// Observation horizon T = N dt.
    pub fn horizon(&self) -> f64 {
        self.dt * self.n_increments() as f64
    }

    /// Keep every `factor`-th point (the coarser grid of the same path).
    pub fn subsample(&self, factor: usize) -> Result<Trajectory> {
        if factor == 0 || !self.n_increments().is_multiple_of(factor) {
            return Err(Error::InvalidInput(format!(
                "subsample factor {factor} must divide the {} increments",
                self.n_increments()
            )));
        }
        let values: Vec<f64> = self.values.iter().copied().step_by(factor).collect();
        Trajectory::new(self.t0, self.dt * factor as f64, values)
    }
}

/// Initial condition of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Init {
    /// Start from a fixed point.
    Deterministic(f64),
    /// Draw the start exactly from the stationary distribution
    /// (ergodic parameter sets only).
    Stationary,
    /// Start from `start`, run the scheme for `duration` time units and
    /// use the terminal value; fallback when exact sampling is not wanted.
    BurnIn { start: f64, duration: f64 },
}

/// Simulation request: model, horizon T, N observation steps and the
/// number of internal Euler substeps per observation step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub params: ModelParams,
    pub horizon: f64,
    pub steps: usize,
    pub init: Init,
    pub substeps: usize,
}

impl SimSpec {
    pub fn new(params: ModelParams, horizon: f64, steps: usize, init: Init) -> Result<Self> {
        let spec = SimSpec {
            params,
            horizon,
            steps,
            init,
            substeps: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_substeps(mut self, substeps: usize) -> Result<Self> {
        self.substeps = substeps;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidInput("horizon must be positive".into()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidInput("steps must be at least 1".into()));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidInput("substeps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }
}

fn draw_initial(spec: &SimSpec, rng: &mut impl RandomSource) -> Result<f64> {
    match spec.init {
        Init::Deterministic(x0) => {
            if !x0.is_finite() {
                return Err(Error::InvalidInput("x0 must be finite".into()));
            }
            Ok(x0)
        }
        Init::Stationary => {
            let dist = stationary_dist(&spec.params)?;
            Ok(dist.sample(rng))
        }
        Init::BurnIn { start, duration } => {
            let h = spec.dt() / spec.substeps as f64;
            let n = (duration / h).ceil() as usize;
            let mut x = start;
            for step in 0..n {
                x = euler_step(&spec.params, x, h, rng.standard_normal());
                check_state(x, step)?;
            }
            Ok(x)
        }
    }
}

#[inline]
fn euler_step(p: &ModelParams, x: f64, h: f64, z: f64) -> f64 {
    let side = p.side_of(x);
    x + (p.b[side] - p.a[side] * x) * h + p.sigma[side] * h.sqrt() * z
}

#[inline]
fn check_state(x: f64, step: usize) -> Result<()> {
    if !x.is_finite() || x.abs() > DIVERGENCE_BOUND {
        Err(Error::Diverged { step })
    } else {
        Ok(())
    }
}

/// Run the Euler scheme: coefficients frozen at the left endpoint of each
/// substep, every `substeps`-th state recorded. Deterministic given the
/// noise source.
pub fn simulate(spec: &SimSpec, rng: &mut impl RandomSource) -> Result<Trajectory> {
    spec.validate()?;
    let mut x = draw_initial(spec, rng)?;
    let h = spec.dt() / spec.substeps as f64;
    let mut values = Vec::with_capacity(spec.steps + 1);
    values.push(x);
    for k in 0..spec.steps {
        for j in 0..spec.substeps {
            x = euler_step(&spec.params, x, h, rng.standard_normal());
            check_state(x, k * spec.substeps + j)?;
        }
        values.push(x);
    }
    Trajectory::new(0.0, spec.dt(), values)
}

/// Simulate `n_paths` independent trajectories; path i uses the random
/// stream (seed, i), so the batch is reproducible and independent of how
/// work is scheduled across threads.
pub fn simulate_batch(spec: &SimSpec, n_paths: usize, seed: u64) -> Result<Vec<Trajectory>> {
    if n_paths == 0 {
        return Err(Error::InvalidInput("n_paths must be at least 1".into()));
    }
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            simulate(spec, &mut rng).map_err(|e| match e {
                Error::Diverged { step } => Error::PathDiverged { path: i, step },
                other => other,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{qbar_constants, Side, SidePair};

    /// Noise stub producing fixed values.
    struct ConstNoise(f64);
    impl RandomSource for ConstNoise {
        fn uniform(&mut self) -> f64 {
            0.5
        }
        fn standard_normal(&mut self) -> f64 {
            self.0
        }
    }

    fn driftless_unit() -> ModelParams {
        ModelParams::new(
            0.0,
            SidePair::uniform(0.0),
            SidePair::uniform(0.0),
            SidePair::uniform(1.0),
        )
        .unwrap()
    }

    #[test]
    fn zero_noise_zero_drift_is_constant() {
        let spec = SimSpec::new(driftless_unit(), 1.0, 16, Init::Deterministic(0.3)).unwrap();
        let traj = simulate(&spec, &mut ConstNoise(0.0)).unwrap();
        assert!(traj.values().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn zero_noise_linear_drift() {
        let c = 0.7;
        let p = ModelParams::new(
            0.0,
            SidePair::uniform(0.0),
            SidePair::uniform(c),
            SidePair::uniform(1.0),
        )
        .unwrap();
        let spec = SimSpec::new(p, 2.0, 8, Init::Deterministic(-1.0)).unwrap();
        let h = spec.dt();
        let traj = simulate(&spec, &mut ConstNoise(0.0)).unwrap();
        for (k, &v) in traj.values().iter().enumerate() {
            let want = -1.0 + c * k as f64 * h;
            assert!((v - want).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn deterministic_per_stream() {
        let spec = SimSpec::new(ModelParams::demo(), 10.0, 500, Init::Stationary).unwrap();
        let a = simulate(&spec, &mut RngStream::new(11, 4)).unwrap();
        let b = simulate(&spec, &mut RngStream::new(11, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_pairs_differ_but_rerun_identically() {
        let spec = SimSpec::new(ModelParams::demo(), 5.0, 100, Init::Stationary).unwrap();
        let batch1 = simulate_batch(&spec, 2, 42).unwrap();
        let batch2 = simulate_batch(&spec, 2, 42).unwrap();
        assert_eq!(batch1, batch2);
        assert_ne!(batch1[0], batch1[1]);
    }

    #[test]
    fn batch_independent_of_worker_count() {
        let spec = SimSpec::new(ModelParams::demo(), 5.0, 200, Init::Stationary).unwrap();
        let parallel = simulate_batch(&spec, 6, 9).unwrap();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_batch(&spec, 6, 9))
            .unwrap();
        assert_eq!(parallel, serial);
    }

    #[test]
    fn divergence_reported_with_step() {
        // strongly outward drift on both sides explodes fast
        let p = ModelParams::new(
            0.0,
            SidePair::uniform(-40.0),
            SidePair::uniform(0.0),
            SidePair::uniform(1.0),
        )
        .unwrap();
        let spec = SimSpec::new(p, 50.0, 50, Init::Deterministic(1.0)).unwrap();
        match simulate(&spec, &mut RngStream::new(0, 0)) {
            Err(Error::Diverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
        match simulate_batch(&spec, 3, 0) {
            Err(Error::PathDiverged { .. }) => {}
            other => panic!("expected path divergence, got {other:?}"),
        }
    }

    #[test]
    fn matches_plain_ou_reference_bitwise() {
        // one coefficient set on both sides = ordinary OU; same variates
        // must give bit-identical paths
        let (a, b, sigma) = (0.8, 0.2, 0.35);
        let p = ModelParams::new(
            -0.3,
            SidePair::uniform(a),
            SidePair::uniform(b),
            SidePair::uniform(sigma),
        )
        .unwrap();
        let spec = SimSpec::new(p, 4.0, 200, Init::Deterministic(0.1)).unwrap();
        let traj = simulate(&spec, &mut RngStream::new(3, 1)).unwrap();

        let mut rng = RngStream::new(3, 1);
        let h = spec.dt();
        let sqrt_h = h.sqrt();
        let mut x = 0.1_f64;
        let mut reference = vec![x];
        for _ in 0..200 {
            x = x + (b - a * x) * h + sigma * sqrt_h * rng.standard_normal();
            reference.push(x);
        }
        for (u, v) in traj.values().iter().zip(&reference) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn shift_equivariance() {
        let base = ModelParams::demo();
        let c = 0.37;
        let shifted = ModelParams::new(
            base.threshold + c,
            base.a,
            SidePair::new(base.b.plus + base.a.plus * c, base.b.minus + base.a.minus * c),
            base.sigma,
        )
        .unwrap();
        let spec_a = SimSpec::new(base, 10.0, 1000, Init::Deterministic(-0.02)).unwrap();
        let spec_b = SimSpec::new(shifted, 10.0, 1000, Init::Deterministic(-0.02 + c)).unwrap();
        let ta = simulate(&spec_a, &mut RngStream::new(8, 0)).unwrap();
        let tb = simulate(&spec_b, &mut RngStream::new(8, 0)).unwrap();
        for (u, v) in ta.values().iter().zip(tb.values()) {
            assert!((u + c - v).abs() < 1e-12);
        }
    }

    #[test]
    fn substeps_refine_the_internal_grid() {
        let p = ModelParams::demo();
        let spec = SimSpec::new(p, 1.0, 10, Init::Deterministic(0.0))
            .unwrap()
            .with_substeps(4)
            .unwrap();
        let traj = simulate(&spec, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(traj.values().len(), 11);
        assert!((traj.dt - 0.1).abs() < 1e-15);
    }

    #[test]
    fn burn_in_init_runs() {
        let spec = SimSpec::new(
            ModelParams::demo(),
            5.0,
            100,
            Init::BurnIn {
                start: -0.02,
                duration: 50.0,
            },
        )
        .unwrap();
        let a = simulate(&spec, &mut RngStream::new(2, 0)).unwrap();
        let b = simulate(&spec, &mut RngStream::new(2, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn occupation_fraction_approaches_qbar() {
        let p = ModelParams::demo();
        let q = qbar_constants(&p).unwrap();
        let spec = SimSpec::new(p, 400.0, 40_000, Init::Stationary).unwrap();
        let n_paths = 40;
        let batch = simulate_batch(&spec, n_paths, 77).unwrap();
        let fracs: Vec<f64> = batch
            .iter()
            .map(|t| {
                let above = t
                    .values()
                    .iter()
                    .take(t.n_increments())
                    .filter(|&&x| x >= p.threshold)
                    .count();
                above as f64 / t.n_increments() as f64
            })
            .collect();
        let mean = fracs.iter().sum::<f64>() / n_paths as f64;
        let var = fracs.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>()
            / (n_paths as f64 - 1.0);
        let se = (var / n_paths as f64).sqrt();
        assert!(
            (mean - q[Side::Plus][0]).abs() < 3.0 * se.max(0.005),
            "mean occupation {mean} vs qbar {}",
            q[Side::Plus][0]
        );
    }

    #[test]
    fn trajectory_validation() {
        assert!(Trajectory::new(0.0, 1.0, vec![1.0]).is_err());
        assert!(Trajectory::new(0.0, 0.0, vec![1.0, 2.0]).is_err());
        assert!(Trajectory::new(0.0, 1.0, vec![1.0, f64::NAN]).is_err());
        let t = Trajectory::new(2.0, 0.5, vec![0.0, 1.0, 0.5]).unwrap();
        assert_eq!(t.n_increments(), 2);
        assert!((t.horizon() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn subsample_factors() {
        let traj = Trajectory::new(0.0, 0.5, (0..=8).map(|i| i as f64).collect()).unwrap();
        let sub = traj.subsample(4).unwrap();
        assert_eq!(sub.values(), &[0.0, 4.0, 8.0]);
        assert!((sub.dt - 2.0).abs() < 1e-15);
        assert!(traj.subsample(3).is_err());
    }
}
