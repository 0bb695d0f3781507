//! Simulate a handful of threshold-OU paths and summarize where they spend
//! their time.
//!
//! Usage: cargo run --release --example simulate_paths [seed]

use threshold_ou::model::{classify_regime, qbar_constants, ModelParams, Side};
use threshold_ou::simulate::{simulate_batch, Init, SimSpec};

fn main() -> Result<(), threshold_ou::Error> {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);

    let params = ModelParams::demo();
    println!("model: {params:#?}");
    println!("regime: {:?}", classify_regime(&params));

    let spec = SimSpec::new(params, 200.0, 20_000, Init::Stationary)?;
    let paths = simulate_batch(&spec, 5, seed)?;

    let qbar = qbar_constants(&params)?;
    println!(
        "\nlong-run occupation of the upper regime: {:.4}",
        qbar[Side::Plus][0]
    );
    println!("{:>6} {:>10} {:>10} {:>10} {:>12}", "path", "min", "max", "last", "frac above r");
    for (i, p) in paths.iter().enumerate() {
        let xs = p.values();
        let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let above = xs.iter().filter(|&&x| x >= params.threshold).count();
        println!(
            "{i:>6} {min:>10.4} {max:>10.4} {:>10.4} {:>12.4}",
            xs[xs.len() - 1],
            above as f64 / xs.len() as f64
        );
    }
    println!("\nwrite CSV with: threshold-ou simulate --paths 5 --seed {seed} --out paths.csv");
    Ok(())
}
