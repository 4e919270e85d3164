//! Prints the association matrix of a batch, ordered by similarity.

use overtaking::analytics::{associations, feature_columns};
use overtaking::config::Config;
use overtaking::detector::analyze;
use overtaking::features::feature_row;
use overtaking::sampler::scenario_for;
use overtaking::sim;

fn main() -> overtaking::Result<()> {
    let cfg = Config::default();
    let mut rows = Vec::new();
    for id in 1..=200 {
        let log = sim::run(&scenario_for(42, id, &cfg.generator)?, &cfg.engine)?;
        let v = analyze(&log, &cfg.detector)?;
        rows.push(feature_row(&log, &v, &cfg.detector, &cfg.generator.geometry)?);
    }

    let m = associations(&feature_columns(&rows, true))?;
    let m = m.reordered(&m.similarity_order());
    print!("{:>6}", "");
    for c in &m.columns {
        print!("{c:>6}");
    }
    println!();
    for (i, c) in m.columns.iter().enumerate() {
        print!("{c:>6}");
        for e in &m.entries[i] {
            match e {
                Some(v) => print!("{v:>6.2}"),
                None => print!("{:>6}", "-"),
            }
        }
        println!();
    }
    Ok(())
}
