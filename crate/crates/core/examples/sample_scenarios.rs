//! Samples a few scenarios and prints their initial placement.
//!
//! cargo run --example sample_scenarios -- 7 5

use overtaking::sampler::{scenario_for, validate_scenario, GeneratorConfig};

fn main() -> overtaking::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let n: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let gen = GeneratorConfig::default();
    for id in 1..=n {
        let spec = scenario_for(seed, id, &gen)?;
        let report = validate_scenario(&spec);
        println!(
            "sim {id}: {} vehicles, {}, limit {} km/h, valid {}",
            spec.vehicles.len(),
            spec.preset.name.as_str(),
            spec.mv_limit,
            report.is_empty()
        );
        for v in &spec.vehicles {
            let tag = if v.id == spec.ego().id { "ego" } else { "" };
            println!(
                "  #{:<2} {:<10} lane {} x {:>7.2} target {:>5.1} km/h {tag}",
                v.id,
                v.kind.as_str(),
                v.lane0,
                v.x0,
                v.target_speed
            );
        }
    }
    Ok(())
}
