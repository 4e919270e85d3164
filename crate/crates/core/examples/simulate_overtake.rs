//! Runs one simulation and prints the ego trajectory at each overtaking event.
//!
//! cargo run --example simulate_overtake -- 42 3

use overtaking::config::Config;
use overtaking::detector::analyze;
use overtaking::sampler::scenario_for;
use overtaking::sim;

fn main() -> overtaking::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let id: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let cfg = Config::default();

    let spec = scenario_for(seed, id, &cfg.generator)?;
    let log = sim::run(&spec, &cfg.engine)?;
    let verdict = analyze(&log, &cfg.detector)?;

    println!("sim {id} ({}), {} frames", spec.preset.name.as_str(), log.frames.len());
    for i in log.ov_indices() {
        let f = &log.frames[i];
        let e = f.ego()?;
        println!("  OV at t={:.2}: x {:.2} lane {} speed {:.2}", f.ts, e.x, e.lane, e.speed);
    }
    if let Some(f) = log.frames.iter().find(|f| f.collision.is_some()) {
        println!("  collision at t={:.2}", f.ts);
    }
    let last = log.frames.last().unwrap().ego()?;
    println!("  final: x {:.2} lane {} speed {:.2}", last.x, last.lane, last.speed);
    println!("label {}", verdict.label.as_str());
    for r in &verdict.trace.violations {
        println!("  {:?} at frame {}: {}", r.rule, r.frame, r.detail);
    }
    Ok(())
}
