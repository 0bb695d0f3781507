//! Compare terminal values of many stationary paths with the closed-form
//! stationary density (renormalized speed measure), including its two modes.
//!
//! Usage: cargo run --release --example invariant_density [paths]

use threshold_ou::experiments::{invariant_density, ExperimentConfig};
use threshold_ou::model::ModelParams;

fn main() -> Result<(), threshold_ou::Error> {
    let n_paths: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(500);
    let cfg = ExperimentConfig {
        params: ModelParams::demo(),
        horizon: 200.0,
        steps: 200_000,
        n_paths,
        seed: 1,
    };
    let report = invariant_density(&cfg, 40)?;

    println!("terminal-value KS distance vs stationary CDF: {:.4}", report.ks_distance);
    println!("theoretical density modes: {}", report.theoretical_modes);
    println!("histogram mass: {:.12}\n", report.histogram_mass);

    // crude terminal histogram with the theoretical curve alongside
    let peak = report
        .bins
        .iter()
        .map(|b| b.theoretical.max(b.empirical))
        .fold(0.0, f64::max);
    for bin in &report.bins {
        let bar = (bin.empirical / peak * 60.0).round() as usize;
        let dot = (bin.theoretical / peak * 60.0).round() as usize;
        let mut line: Vec<char> = vec![' '; 62];
        for c in line.iter_mut().take(bar) {
            *c = '#';
        }
        if dot < line.len() {
            line[dot] = '|';
        }
        println!("{:>8.4} {}", bin.x, line.into_iter().collect::<String>());
    }
    println!("\n('#' simulated, '|' theoretical)");
    Ok(())
}
