//! Dumps a replay trace of one simulation as JSON Lines, every 20th frame.

use overtaking::config::Config;
use overtaking::io::replay_trace;
use overtaking::sampler::scenario_for;
use overtaking::sim;

fn main() -> overtaking::Result<()> {
    let cfg = Config::default();
    let log = sim::run(&scenario_for(42, 1, &cfg.generator)?, &cfg.engine)?;
    for f in replay_trace(&log).iter().step_by(20) {
        println!("{}", serde_json::to_string(f)?);
    }
    Ok(())
}
