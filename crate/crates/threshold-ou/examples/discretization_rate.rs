//! Watch the discrete estimator and the crossing local time converge to
//! their finest-grid values as the observation frequency grows: both decay
//! at the anomalous quarter-power rate driven by threshold crossings.
//!
//! Usage: cargo run --release --example discretization_rate [paths]

use threshold_ou::experiments::{rate_study, RateStudyConfig};
use threshold_ou::model::{ModelParams, SidePair};

fn main() -> Result<(), threshold_ou::Error> {
    let n_paths: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(100);
    let ladder: Vec<usize> = (10..=16).map(|k| 1usize << k).collect();

    // driftless two-volatility model: the cleanest setting for the
    // local-time approximation
    let obm = ModelParams::new(
        0.0,
        SidePair::uniform(0.0),
        SidePair::uniform(0.0),
        SidePair::new(1.0, 0.6),
    )?;
    let cfg = RateStudyConfig {
        params: obm,
        horizon: 1.0,
        x0: 0.0,
        ladder: ladder.clone(),
        n_ref: 1 << 20,
        n_paths,
        seed: 5,
    };
    let report = rate_study(&cfg)?;
    println!("local-time gap vs reference grid (driftless, sigma 1.0/0.6):");
    for row in &report.rows {
        println!("  N = {:>6}: mean |gap| = {:.5}", row.n, row.mean_local_time_gap);
    }
    println!(
        "  fitted log-log slope: {:.3} (quarter-power rate: -0.25)\n",
        report.slope_local_time.unwrap()
    );

    // drift estimation needs a long horizon so both regimes stay
    // well-conditioned on every path
    let cfg = RateStudyConfig {
        params: ModelParams::demo(),
        horizon: 1000.0,
        x0: 0.01,
        ladder,
        n_ref: 1 << 20,
        n_paths,
        seed: 5,
    };
    let report = rate_study(&cfg)?;
    println!("drift-estimator gap vs reference grid (two-regime model, T = 1000):");
    for row in &report.rows {
        println!(
            "  N = {:>6}: mean |gap| = {:.5}  (median {:.5})",
            row.n,
            row.mean_estimator_gap.unwrap(),
            row.median_estimator_gap.unwrap()
        );
    }
    println!(
        "  fitted log-log slope: {:.3}",
        report.slope_estimator.unwrap()
    );
    Ok(())
}
