//! Generates, labels and analyses a run directory, then validates it.
//!
//! cargo run --release --example full_pipeline -- /tmp/run 300 42

use std::path::PathBuf;

use overtaking::config::Config;
use overtaking::pipeline::{self, GenerateOptions};

fn main() -> overtaking::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("overtaking-run"));
    let sims: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);

    pipeline::run_all(&dir, sims, seed, &Config::default(), GenerateOptions::default())?;
    pipeline::correlate(&dir, true)?;
    let sbs = pipeline::sbs(&dir)?;
    pipeline::export(&dir)?;
    println!("SBS ranking: {}", sbs.ranking.join(" > "));

    let problems = pipeline::validate(&dir)?;
    if problems.is_empty() {
        println!("{} is consistent", dir.display());
    } else {
        for p in problems {
            eprintln!("{p}");
        }
    }
    Ok(())
}
