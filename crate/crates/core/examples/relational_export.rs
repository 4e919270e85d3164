//! Writes the normalized tables for a few runs into a directory.
//!
//! cargo run --example relational_export -- /tmp/tables

use std::path::PathBuf;

use overtaking::config::Config;
use overtaking::detector::analyze;
use overtaking::domain::DimensionTable;
use overtaking::io::{export_relational, read_relational};
use overtaking::sampler::scenario_for;
use overtaking::sim;

fn main() -> overtaking::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("overtaking-tables"));
    let cfg = Config::default();
    let mut logs = Vec::new();
    let mut verdicts = Vec::new();
    for id in 1..=5 {
        let log = sim::run(&scenario_for(42, id, &cfg.generator)?, &cfg.engine)?;
        verdicts.push(analyze(&log, &cfg.detector)?);
        logs.push(log);
    }
    let dims = DimensionTable::default();
    for p in export_relational(&logs, &verdicts, &dims, &out)? {
        println!("{}", p.display());
    }
    let t = read_relational(&out)?;
    println!(
        "{} simulations, {} frames, {} vehicles, {} vehicle states",
        t.simulations.len(),
        t.frames.len(),
        t.vehicles.len(),
        t.vehicle_states.len()
    );
    Ok(())
}
