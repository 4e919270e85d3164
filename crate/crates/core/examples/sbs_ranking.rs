//! Ranks features by backward selection, once with the built-in evaluator
//! and once with a closure.

use overtaking::analytics::{sbs_rank, NearestCentroid};
use overtaking::config::Config;
use overtaking::detector::analyze;
use overtaking::features::{feature_row, FEATURE_NAMES};
use overtaking::sampler::scenario_for;
use overtaking::sim;

fn main() -> overtaking::Result<()> {
    let cfg = Config::default();
    let mut rows = Vec::new();
    for id in 1..=120 {
        let log = sim::run(&scenario_for(42, id, &cfg.generator)?, &cfg.engine)?;
        let v = analyze(&log, &cfg.detector)?;
        rows.push(feature_row(&log, &v, &cfg.detector, &cfg.generator.geometry)?);
    }
    let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();

    let mut nc = NearestCentroid::from_rows(&rows)?;
    let r = sbs_rank(&names, &mut nc)?;
    println!("baseline accuracy {:.3}", r.baseline);
    for s in &r.steps {
        println!("  drop {:<5} -> {:.3}", s.removed, s.accuracy);
    }
    println!("ranking: {}", r.ranking.join(" > "));

    // any scoring function works; this one prefers small subsets with OT in them
    let ot = names.iter().position(|n| n == "OT").unwrap();
    let mut toy = |s: &[usize]| -> Result<f64, String> {
        Ok(if s.contains(&ot) { 1.0 } else { 0.0 } - s.len() as f64 * 0.01)
    };
    let r = sbs_rank(&names, &mut toy)?;
    println!("toy ranking: {} ({} evaluations)", r.ranking.join(" > "), r.evaluations);
    Ok(())
}
