//! Extracts feature rows for a batch and writes them as CSV to stdout.
//!
//! cargo run --example extract_features -- 20 42 > features.csv

use overtaking::config::Config;
use overtaking::detector::analyze;
use overtaking::features::feature_row;
use overtaking::io::write_features;
use overtaking::sampler::scenario_for;
use overtaking::sim;

fn main() -> overtaking::Result<()> {
    let mut args = std::env::args().skip(1);
    let sims: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let cfg = Config::default();

    let mut rows = Vec::new();
    for id in 1..=sims {
        let log = sim::run(&scenario_for(seed, id, &cfg.generator)?, &cfg.engine)?;
        let v = analyze(&log, &cfg.detector)?;
        rows.push(feature_row(&log, &v, &cfg.detector, &cfg.generator.geometry)?);
    }
    write_features(&rows, std::io::stdout().lock())
}
