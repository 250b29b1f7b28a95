//! Desk-scale rate experiment for one model: mean loss per sample size and
//! the log-log slope.
//!
//! ```text
//! cargo run --release --example rate_experiment -- A 3 [seed]
//! ```

use std::time::Instant;

use mixrates::experiments::{
    fit_slope, run_experiment, ExperimentConfig, ModelName, ModelSpec, Scale,
};

fn main() -> mixrates::Result<()> {
    let mut args = std::env::args().skip(1);
    let name: ModelName = args.next().as_deref().unwrap_or("A").parse()?;
    let k: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2024);
    let spec = ModelSpec::new(name, None, k)?;

    let start = Instant::now();
    let mut cfg = ExperimentConfig::at_scale(spec, Scale::Desk, seed);
    cfg.timing = true;
    let records = run_experiment(&cfg)?;
    let fit = fit_slope(&records)?;

    println!(
        "model {name}, k = {k}, seed {seed}: {} records in {:.1?}",
        records.len(),
        start.elapsed()
    );
    println!(
        "{:>6} {:>11} {:>11} {:>6} {:>8}",
        "n", "mean", "2 sd", "at T", "ms"
    );
    for p in &fit.points {
        let ms: u64 = records
            .iter()
            .filter(|r| r.n == p.n)
            .map(|r| r.wall_ms)
            .sum();
        println!(
            "{:>6} {:>11.4e} {:>11.4e} {:>6} {:>8}",
            p.n, p.mean, p.error_bar, p.not_converged, ms
        );
    }
    println!("slope {:.4} (se {:.4})", fit.slope, fit.slope_se);
    Ok(())
}
