//! Simulates a batch of runs and prints the label distribution.
//!
//! cargo run --release --example classify_runs -- 300 42

use std::collections::BTreeMap;

use overtaking::config::Config;
use overtaking::detector::analyze;
use overtaking::sampler::scenario_for;
use overtaking::sim;

fn main() -> overtaking::Result<()> {
    let mut args = std::env::args().skip(1);
    let sims: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let cfg = Config::default();

    let mut counts = BTreeMap::new();
    let mut rules = BTreeMap::new();
    for id in 1..=sims {
        let spec = scenario_for(seed, id, &cfg.generator)?;
        let log = sim::run(&spec, &cfg.engine)?;
        let v = analyze(&log, &cfg.detector)?;
        *counts.entry(v.label).or_insert(0) += 1;
        for r in &v.trace.violations {
            *rules.entry(format!("{:?}", r.rule)).or_insert(0) += 1;
        }
    }
    println!("{sims} runs, seed {seed}");
    for (label, n) in &counts {
        println!("  {:<15} {n}", label.as_str());
    }
    println!("violations:");
    for (rule, n) in &rules {
        println!("  {rule:<15} {n}");
    }
    Ok(())
}
