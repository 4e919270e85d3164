//! Per-class summaries and box statistics of a generated batch.

use overtaking::analytics::{boxplot_stats, class_stats};
use overtaking::config::Config;
use overtaking::detector::analyze;
use overtaking::features::feature_row;
use overtaking::sampler::scenario_for;
use overtaking::sim;

fn main() -> overtaking::Result<()> {
    let cfg = Config::default();
    let mut rows = Vec::new();
    for id in 1..=150 {
        let log = sim::run(&scenario_for(42, id, &cfg.generator)?, &cfg.engine)?;
        let v = analyze(&log, &cfg.detector)?;
        rows.push(feature_row(&log, &v, &cfg.detector, &cfg.generator.geometry)?);
    }

    for s in class_stats(&rows)?.iter().filter(|s| s.feature == "OT" || s.feature == "DSEP") {
        println!(
            "{:<5} {:<15} n={:<4} min {:>8.2} mean {:>8.2} max {:>8.2} sd {:>7.2}",
            s.feature,
            s.class.as_str(),
            s.n,
            s.min,
            s.mean,
            s.max,
            s.sigma
        );
    }

    let se: Vec<f64> = rows.iter().map(|r| r.se).collect();
    let b = boxplot_stats(&se)?;
    println!(
        "SE box: q1 {:.2} median {:.2} q3 {:.2}, {} outliers",
        b.q1,
        b.median,
        b.q3,
        b.outliers.len()
    );
    Ok(())
}
