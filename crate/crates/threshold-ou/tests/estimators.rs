//! Longer-running checks of the estimation pipeline on simulated data at
//! realistic scales.

use threshold_ou::estimate::{
    fit_at_threshold, threshold_search, Method, ThresholdGrid,
};
use threshold_ou::experiments::{mc_clt, ExperimentConfig};
use threshold_ou::model::{gamma_theoretical, ModelParams, Side};
use threshold_ou::numerics::RngStream;
use threshold_ou::simulate::{simulate, Init, SimSpec};
use threshold_ou::stats::{sufficient_stats, volatility_estimate};

#[test]
fn volatility_recovered_at_high_frequency() {
    let p = ModelParams::demo();
    let spec = SimSpec::new(p, 1000.0, 1_000_000, Init::Stationary).unwrap();
    let traj = simulate(&spec, &mut RngStream::new(41, 0)).unwrap();
    let stats = sufficient_stats(&traj, p.threshold);
    let sigma = volatility_estimate(&stats).unwrap();
    assert!(
        (sigma.plus - p.sigma.plus).abs() < 0.05 * p.sigma.plus,
        "sigma_plus {} vs {}",
        sigma.plus,
        p.sigma.plus
    );
    assert!(
        (sigma.minus - p.sigma.minus).abs() < 0.05 * p.sigma.minus,
        "sigma_minus {} vs {}",
        sigma.minus,
        p.sigma.minus
    );
}

#[test]
fn drift_estimates_within_three_standard_errors() {
    let p = ModelParams::demo();
    let constants = gamma_theoretical(&p).unwrap();
    let horizon = 1000.0;
    let spec = SimSpec::new(p, horizon, 1_000_000, Init::Stationary).unwrap();
    let traj = simulate(&spec, &mut RngStream::new(42, 0)).unwrap();
    let fit = fit_at_threshold(&traj, p.threshold, Method::Mle).unwrap();
    let theta = fit.estimate.both().unwrap();
    for side in Side::BOTH {
        let cov = constants.clt_cov[side];
        let se_a = (cov.0[0][0] / horizon).sqrt();
        let se_b = (cov.0[1][1] / horizon).sqrt();
        assert!(
            (theta.a[side] - p.a[side]).abs() < 3.0 * se_a,
            "{side}: a {} vs {} (se {se_a})",
            theta.a[side],
            p.a[side]
        );
        assert!(
            (theta.b[side] - p.b[side]).abs() < 3.0 * se_b,
            "{side}: b {} vs {} (se {se_b})",
            theta.b[side],
            p.b[side]
        );
    }
}

#[test]
fn threshold_search_recovers_the_level() {
    // the threshold estimate lands within 0.01 of the true level on most
    // long-horizon runs; shorter horizons are visibly noisier
    let p = ModelParams::demo();
    let spec = SimSpec::new(p, 1000.0, 1_000_000, Init::Stationary).unwrap();
    let runs = 10;
    let mut hits = 0;
    for seed in 0..runs {
        let traj = simulate(&spec, &mut RngStream::new(seed, 0)).unwrap();
        let grid = ThresholdGrid::from_trajectory(&traj, 0.15, 60).unwrap();
        let fit = threshold_search(&traj, &grid, Method::Qmle).unwrap();
        if (fit.threshold - p.threshold).abs() <= 0.01 {
            hits += 1;
        }
    }
    assert!(hits >= 8, "threshold recovered in only {hits}/{runs} runs");
}

#[test]
fn mle_and_qmle_share_the_drift_block_after_search() {
    let p = ModelParams::demo();
    let spec = SimSpec::new(p, 500.0, 500_000, Init::Stationary).unwrap();
    let traj = simulate(&spec, &mut RngStream::new(7, 0)).unwrap();
    let grid = ThresholdGrid::from_trajectory(&traj, 0.15, 100).unwrap();
    let mle = threshold_search(&traj, &grid, Method::Mle).unwrap();
    let qmle = threshold_search(&traj, &grid, Method::Qmle).unwrap();
    // the two searches may pick different thresholds; at the same one the
    // drift block must agree exactly
    let refit = fit_at_threshold(&traj, mle.threshold, Method::Qmle).unwrap();
    assert_eq!(mle.estimate, refit.estimate);
    let refit = fit_at_threshold(&traj, qmle.threshold, Method::Mle).unwrap();
    assert_eq!(qmle.estimate, refit.estimate);
}

#[test]
fn scaled_errors_approach_the_limit_law_with_horizon() {
    // pre-asymptotic effects shrink visibly as T grows at fixed T^2/N:
    // the covariance deviation is orders of magnitude apart between
    // T = 100 and T = 400, and the raw mean-square error falls as well
    let mut devs = Vec::new();
    let mut mses = Vec::new();
    for (t, n) in [(100.0, 100_000usize), (200.0, 400_000), (400.0, 1_600_000)] {
        let cfg = ExperimentConfig {
            params: ModelParams::demo(),
            horizon: t,
            steps: n,
            n_paths: 100,
            seed: 0,
        };
        let report = mc_clt(&cfg, 0.01).unwrap();
        devs.push(report.cov_max_rel_dev);
        // undo the sqrt(T) scaling to get the plain estimation error
        let mse = report
            .scaled_errors
            .iter()
            .map(|e| e.iter().map(|v| v * v / t).sum::<f64>())
            .sum::<f64>()
            / report.scaled_errors.len() as f64;
        mses.push(mse);
    }
    assert!(
        devs[2] < devs[1] && devs[1] < devs[0],
        "covariance deviation should fall with T: {devs:?}"
    );
    assert!(devs[2] < 2.0, "near the limit at T = 400: {devs:?}");
    assert!(
        mses[2] < mses[1] && mses[1] < mses[0],
        "estimator MSE should fall along the ladder: {mses:?}"
    );
}
