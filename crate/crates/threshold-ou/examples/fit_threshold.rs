//! Estimate threshold, drift and volatility from one simulated trajectory,
//! under both the likelihood and quasi-likelihood objectives.
//!
//! Usage: cargo run --release --example fit_threshold [seed]

use threshold_ou::estimate::{threshold_search, Method, ThresholdGrid};
use threshold_ou::model::{ModelParams, Side};
use threshold_ou::numerics::RngStream;
use threshold_ou::simulate::{simulate, Init, SimSpec};

fn main() -> Result<(), threshold_ou::Error> {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);

    let params = ModelParams::demo();
    // high-frequency long path, as a real calibration would want
    let spec = SimSpec::new(params, 1000.0, 1_000_000, Init::Stationary)?;
    let traj = simulate(&spec, &mut RngStream::new(seed, 0))?;
    let grid = ThresholdGrid::from_trajectory(&traj, 0.15, 200)?;
    println!(
        "threshold grid: {} candidates in [{:.4}, {:.4}] (true r = {})",
        grid.candidates.len(),
        grid.candidates[0],
        grid.candidates[grid.candidates.len() - 1],
        params.threshold,
    );

    println!(
        "\n{:>6} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "", "r", "b-", "b+", "a-", "a+", "b-/a-", "b+/a+", "sig-", "sig+"
    );
    for method in [Method::Mle, Method::Qmle] {
        let fit = threshold_search(&traj, &grid, method)?;
        let theta = fit.estimate.both()?;
        let lvl = |s| fit.reversion_level(s).map(|v| format!("{v:.4}")).unwrap_or("-".into());
        println!(
            "{:>6} {:>9.4} {:>9.5} {:>9.5} {:>9.4} {:>9.4} {:>9} {:>9} {:>9.5} {:>9.5}",
            fit.method.to_string(),
            fit.threshold,
            theta.b.minus,
            theta.b.plus,
            theta.a.minus,
            theta.a.plus,
            lvl(Side::Minus),
            lvl(Side::Plus),
            fit.sigma.minus,
            fit.sigma.plus,
        );
    }
    println!("\ntruth : r={} b-={} b+={} a-={} a+={} sig-={} sig+={}",
        params.threshold, params.b.minus, params.b.plus,
        params.a.minus, params.a.plus, params.sigma.minus, params.sigma.plus);
    Ok(())
}
