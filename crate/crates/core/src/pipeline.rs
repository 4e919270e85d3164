//! Run-directory orchestration. Each stage reads what earlier stages wrote
//! and refreshes the manifest.
//!
//! ```text
//! DIR/
//!   run.json             seed, simulation count, configuration
//!   scenarios.jsonl      sampled initial conditions
//!   logs/sim_0001.csv    frame logs
//!   labels.jsonl         per-run verdicts
//!   features.csv
//!   stats.csv hist.csv box.csv scaled.csv
//!   assoc.csv pvalues.csv
//!   sbs.csv
//!   replay/sim_0001.jsonl
//!   relational/*.csv
//!   manifest.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    associations, boxplot_stats, class_stats, feature_columns, histogram, minmax_scale, sbs_rank,
    AssociationMatrix, NearestCentroid, SbsResult,
};
use crate::config::Config;
use crate::detector::{analyze, Verdict};
use crate::error::{Error, Result};
use crate::features::{feature_row, FeatureRow, FEATURE_NAMES};
use crate::io::{self, FrameLogOptions, Manifest};
use crate::log::SimulationLog;
use crate::sampler::{scenario_for, validate_scenario, ScenarioSpec};
use crate::sim;

pub const RUN_FILE: &str = "run.json";
pub const LOG_DIR: &str = "logs";
pub const SCENARIOS_FILE: &str = "scenarios.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";
pub const FEATURES_FILE: &str = "features.csv";
pub const STATS_FILE: &str = "stats.csv";
pub const HIST_FILE: &str = "hist.csv";
pub const BOX_FILE: &str = "box.csv";
pub const SCALED_FILE: &str = "scaled.csv";
pub const ASSOC_FILE: &str = "assoc.csv";
pub const PVALUES_FILE: &str = "pvalues.csv";
pub const SBS_FILE: &str = "sbs.csv";
pub const REPLAY_DIR: &str = "replay";
pub const RELATIONAL_DIR: &str = "relational";

/// Simulations held in memory between writes during generation.
const CHUNK: u32 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub seed: u64,
    pub sims: u32,
    pub carla_lane_ids: bool,
    pub config: Config,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GenerateOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub carla_lane_ids: bool,
}

pub fn log_path(dir: &Path, sim_id: u32) -> PathBuf {
    dir.join(LOG_DIR).join(format!("sim_{sim_id:04}.csv"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_run_info(dir: &Path) -> Result<RunInfo> {
    let path = dir.join(RUN_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Re-hashes every artifact in the directory.
pub fn refresh_manifest(dir: &Path) -> Result<Manifest> {
    let info = load_run_info(dir)?;
    let m = io::build_manifest(dir, info.seed, info.sims)?;
    io::save_manifest(dir, &m)?;
    Ok(m)
}

fn simulate(seed: u64, sim_id: u32, config: &Config) -> Result<(ScenarioSpec, SimulationLog)> {
    let spec = scenario_for(seed, sim_id, &config.generator)?;
    let log = sim::run(&spec, &config.engine)?;
    Ok((spec, log))
}

/// Samples and simulates `sims` runs, writing logs in simulation order.
pub fn generate(dir: &Path, sims: u32, seed: u64, config: &Config, opts: GenerateOptions) -> Result<Manifest> {
    config.generator.validate()?;
    fs::create_dir_all(dir.join(LOG_DIR)).map_err(|e| Error::io(dir, e))?;
    write_json(
        &dir.join(RUN_FILE),
        &RunInfo {
            seed,
            sims,
            carla_lane_ids: opts.carla_lane_ids,
            config: config.clone(),
        },
    )?;
    let pool = match opts.threads {
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidInput(e.to_string()))?,
        ),
        None => None,
    };
    let log_opts = FrameLogOptions {
        carla_lane_ids: opts.carla_lane_ids,
    };
    let mut specs = Vec::with_capacity(sims as usize);
    let mut start = 1;
    while start <= sims {
        let end = (start + CHUNK - 1).min(sims);
        let work = || {
            (start..=end)
                .into_par_iter()
                .map(|id| simulate(seed, id, config))
                .collect::<Result<Vec<_>>>()
        };
        let batch = match &pool {
            Some(p) => p.install(work)?,
            None => work()?,
        };
        for (spec, log) in batch {
            io::save_frame_log(&log_path(dir, spec.sim_id), &log, log_opts)?;
            specs.push(spec);
        }
        start = end + 1;
    }
    io::save_jsonl(&dir.join(SCENARIOS_FILE), &specs)?;
    refresh_manifest(dir)
}

/// Frame logs of the run in simulation order, with native lane ids.
pub fn load_logs(dir: &Path) -> Result<Vec<SimulationLog>> {
    let info = load_run_info(dir)?;
    (1..=info.sims)
        .map(|id| io::load_frame_log(&log_path(dir, id)).map(SimulationLog::with_native_lane_ids))
        .collect()
}

fn label_logs(logs: &[SimulationLog], config: &Config) -> Result<Vec<Verdict>> {
    logs.par_iter().map(|l| analyze(l, &config.detector)).collect()
}

pub fn label(dir: &Path) -> Result<Vec<Verdict>> {
    let info = load_run_info(dir)?;
    let verdicts = label_logs(&load_logs(dir)?, &info.config)?;
    io::save_verdicts(&dir.join(LABELS_FILE), &verdicts)?;
    refresh_manifest(dir)?;
    Ok(verdicts)
}

pub fn features(dir: &Path) -> Result<Vec<FeatureRow>> {
    let info = load_run_info(dir)?;
    let logs = load_logs(dir)?;
    let verdicts = io::load_verdicts(&dir.join(LABELS_FILE))?;
    if verdicts.len() != logs.len() {
        return Err(Error::Validation(format!(
            "{} verdicts for {} logs; rerun label",
            verdicts.len(),
            logs.len()
        )));
    }
    let cfg = &info.config;
    let rows = logs
        .par_iter()
        .zip(&verdicts)
        .map(|(log, v)| {
            if v.sim != log.sim_id {
                return Err(Error::Validation(format!("verdict {} paired with log {}", v.sim, log.sim_id)));
            }
            feature_row(log, v, &cfg.detector, &cfg.generator.geometry)
        })
        .collect::<Result<Vec<_>>>()?;
    io::save_features(&dir.join(FEATURES_FILE), &rows)?;
    refresh_manifest(dir)?;
    Ok(rows)
}

pub fn load_features(dir: &Path) -> Result<Vec<FeatureRow>> {
    io::load_features(&dir.join(FEATURES_FILE))
}

/// Per-class summaries, histograms, box statistics and scaled columns.
pub fn stats(dir: &Path, bins: usize) -> Result<()> {
    let rows = load_features(dir)?;
    io::save_class_stats(&dir.join(STATS_FILE), &class_stats(&rows)?)?;
    let cols = feature_columns(&rows, false);
    let mut hists = Vec::new();
    let mut boxes = Vec::new();
    let mut scaled = Vec::new();
    for c in &cols {
        hists.push((c.name.clone(), histogram(&c.values, bins)?));
        let s = minmax_scale(&c.values);
        boxes.push((c.name.clone(), boxplot_stats(&s)?));
        scaled.push(s);
    }
    io::save_histograms(&dir.join(HIST_FILE), &hists)?;
    io::save_boxes(&dir.join(BOX_FILE), &boxes)?;
    let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let classes: Vec<_> = rows.iter().map(|r| r.class).collect();
    io::save_scaled(&dir.join(SCALED_FILE), &names, &scaled, &classes)?;
    refresh_manifest(dir)?;
    Ok(())
}

pub fn correlate(dir: &Path, cluster: bool) -> Result<AssociationMatrix> {
    let rows = load_features(dir)?;
    let mut m = associations(&feature_columns(&rows, true))?;
    if cluster {
        m = m.reordered(&m.similarity_order());
    }
    io::save_associations(&dir.join(ASSOC_FILE), &dir.join(PVALUES_FILE), &m)?;
    refresh_manifest(dir)?;
    Ok(m)
}

pub fn sbs(dir: &Path) -> Result<SbsResult> {
    let rows = load_features(dir)?;
    let mut evaluator = NearestCentroid::from_rows(&rows)?;
    let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let result = sbs_rank(&names, &mut evaluator)?;
    io::save_sbs(&dir.join(SBS_FILE), &result)?;
    refresh_manifest(dir)?;
    Ok(result)
}

/// JSON Lines trace of one simulation for external viewers.
pub fn replay(dir: &Path, sim_id: u32) -> Result<PathBuf> {
    let log = io::load_frame_log(&log_path(dir, sim_id))?.with_native_lane_ids();
    let path = dir.join(REPLAY_DIR).join(format!("sim_{sim_id:04}.jsonl"));
    io::save_jsonl(&path, &io::replay_trace(&log))?;
    refresh_manifest(dir)?;
    Ok(path)
}

pub fn export(dir: &Path) -> Result<Vec<PathBuf>> {
    let info = load_run_info(dir)?;
    let logs = load_logs(dir)?;
    let labels_path = dir.join(LABELS_FILE);
    let verdicts = if labels_path.exists() {
        io::load_verdicts(&labels_path)?
    } else {
        Vec::new()
    };
    let paths = io::export_relational(&logs, &verdicts, &info.config.detector.dimensions, &dir.join(RELATIONAL_DIR))?;
    refresh_manifest(dir)?;
    Ok(paths)
}

/// Checks hashes, reparses every artifact and re-validates scenarios.
/// Returns the list of problems; empty means valid.
pub fn validate(dir: &Path) -> Result<Vec<String>> {
    let mut problems = Vec::new();
    let manifest = match io::load_manifest(dir) {
        Ok(m) => m,
        Err(e) => return Ok(vec![format!("manifest: {e}")]),
    };
    problems.extend(io::verify_manifest(dir, &manifest)?);
    let info = match load_run_info(dir) {
        Ok(i) => i,
        Err(e) => {
            problems.push(format!("{RUN_FILE}: {e}"));
            return Ok(problems);
        }
    };
    if manifest.seed != info.seed || manifest.sims != info.sims {
        problems.push("manifest seed or count differs from run.json".into());
    }
    let mut note = |what: &str, r: Result<()>| {
        if let Err(e) = r {
            problems.push(format!("{what}: {e}"));
        }
    };
    for id in 1..=info.sims {
        let path = log_path(dir, id);
        note(
            &path.display().to_string(),
            io::load_frame_log(&path).and_then(|l| l.check_well_formed()),
        );
    }
    let specs: Result<Vec<ScenarioSpec>> = io::load_jsonl(&dir.join(SCENARIOS_FILE));
    match specs {
        Ok(specs) => {
            if specs.len() != info.sims as usize {
                problems.push(format!("{SCENARIOS_FILE}: {} entries for {} simulations", specs.len(), info.sims));
            }
            for s in &specs {
                for msg in validate_scenario(s).messages() {
                    problems.push(format!("scenario {}: {msg}", s.sim_id));
                }
            }
        }
        Err(e) => problems.push(format!("{SCENARIOS_FILE}: {e}")),
    }
    let mut note = |what: &str, r: Result<()>| {
        if let Err(e) = r {
            problems.push(format!("{what}: {e}"));
        }
    };
    if dir.join(LABELS_FILE).exists() {
        note(LABELS_FILE, io::load_verdicts(&dir.join(LABELS_FILE)).map(drop));
    }
    if dir.join(FEATURES_FILE).exists() {
        note(FEATURES_FILE, load_features(dir).map(drop));
    }
    if dir.join(STATS_FILE).exists() {
        note(STATS_FILE, io::load_class_stats(&dir.join(STATS_FILE)).map(drop));
    }
    for f in [ASSOC_FILE, PVALUES_FILE] {
        if dir.join(f).exists() {
            note(f, io::load_square(&dir.join(f)).map(drop));
        }
    }
    if dir.join(RELATIONAL_DIR).exists() {
        note(RELATIONAL_DIR, io::read_relational(&dir.join(RELATIONAL_DIR)).map(drop));
    }
    Ok(problems)
}

/// generate, label, features and stats in one call.
pub fn run_all(dir: &Path, sims: u32, seed: u64, config: &Config, opts: GenerateOptions) -> Result<Manifest> {
    generate(dir, sims, seed, config, opts)?;
    label(dir)?;
    features(dir)?;
    stats(dir, 10)?;
    io::load_manifest(dir)
}
