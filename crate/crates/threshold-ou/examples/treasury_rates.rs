//! Run the full rate pipeline on a daily interest-rate series: threshold
//! search under both objectives, drift/volatility estimates, mean-reversion
//! levels and the regime test.
//!
//! Usage: cargo run --release --example treasury_rates <rates.csv> [tail]
//!
//! The CSV needs a `date,value` header with ISO dates and rates in percent
//! (e.g. a 3-month T-Bill daily closing series).

use threshold_ou::experiments::{rates_from_csv, RatesConfig, RatesMethodReport};

fn print_fit(fit: &RatesMethodReport) {
    println!("{}:", fit.method);
    println!("  threshold r = {:.4}", fit.threshold);
    println!(
        "  below: a = {:.4}, b = {:.4}, reversion level = {}",
        fit.a_minus,
        fit.b_minus,
        fit.level_minus.map(|v| format!("{v:.3}")).unwrap_or("-".into())
    );
    println!(
        "  above: a = {:.4}, b = {:.4}, reversion level = {}",
        fit.a_plus,
        fit.b_plus,
        fit.level_plus.map(|v| format!("{v:.3}")).unwrap_or("-".into())
    );
    println!("  sigma: below {:.4}, above {:.4}", fit.sigma_minus, fit.sigma_plus);
    println!(
        "  regime test at p = {}: {} (distance {:.2}, radius {:.3})\n",
        fit.test.p,
        if fit.test.reject { "reject single regime" } else { "inconclusive" },
        fit.test.min_mahalanobis,
        fit.test.q_p
    );
}

fn main() {
    let mut args = std::env::args().skip(1);
    let Some(path) = args.next() else {
        eprintln!("usage: treasury_rates <rates.csv> [tail]");
        eprintln!("no CSV supplied; nothing to do");
        return;
    };
    let tail = args.next().and_then(|s| s.parse().ok());
    let cfg = RatesConfig {
        tail,
        ..RatesConfig::default()
    };
    match rates_from_csv(std::path::Path::new(&path), &cfg) {
        Ok(report) => {
            println!(
                "{} observations ({} rows dropped), {} to {}, dt = {} months\n",
                report.n_observations,
                report.dropped_rows,
                report.first_date,
                report.last_date,
                report.dt_months
            );
            print_fit(&report.mle);
            print_fit(&report.qmle);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
