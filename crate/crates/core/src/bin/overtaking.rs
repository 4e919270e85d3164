use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use overtaking::config::Config;
use overtaking::pipeline::{self, GenerateOptions};

#[derive(Parser)]
#[command(name = "overtaking", version, about = "Generate and analyse synthetic overtaking runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample and simulate runs into DIR.
    Generate {
        #[arg(long)]
        sims: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, visible_alias = "dir")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        /// Write lane ids as -3..-7.
        #[arg(long)]
        carla_lane_ids: bool,
    },
    /// Label every run.
    Label {
        #[arg(long, visible_alias = "dir")]
        out: PathBuf,
    },
    /// Build features.csv from logs and labels.
    Features {
        #[arg(long, visible_alias = "dir")]
        out: PathBuf,
    },
    /// Per-class statistics, histograms and box statistics.
    Stats {
        #[arg(long, visible_alias = "dir")]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins: usize,
    },
    /// Association matrix and p-values.
    Correlate {
        #[arg(long, visible_alias = "dir")]
        out: PathBuf,
        /// Order columns by similarity.
        #[arg(long)]
        cluster: bool,
    },
    /// Backward feature selection ranking.
    Sbs {
        #[arg(long, visible_alias = "dir")]
        out: PathBuf,
    },
    /// Check hashes and reparse every artifact.
    Validate {
        #[arg(long, visible_alias = "dir")]
        out: PathBuf,
    },
    /// Write a JSON Lines trace of one simulation.
    ReplayTrace {
        #[arg(long, visible_alias = "dir")]
        out: PathBuf,
        #[arg(long)]
        sim: u32,
    },
    /// Write the normalized tables.
    Export {
        #[arg(long, visible_alias = "dir")]
        out: PathBuf,
    },
}

fn run(cmd: Command) -> overtaking::Result<bool> {
    match cmd {
        Command::Generate {
            sims,
            seed,
            config,
            out,
            threads,
            carla_lane_ids,
        } => {
            let cfg = match config {
                Some(p) => Config::load(&p)?,
                None => Config::default(),
            };
            let m = pipeline::generate(&out, sims, seed, &cfg, GenerateOptions { threads, carla_lane_ids })?;
            println!("{} simulations, {} files", sims, m.files.len());
        }
        Command::Label { out } => {
            let v = pipeline::label(&out)?;
            println!("{} runs labeled", v.len());
        }
        Command::Features { out } => {
            let rows = pipeline::features(&out)?;
            println!("{} feature rows", rows.len());
        }
        Command::Stats { out, bins } => pipeline::stats(&out, bins)?,
        Command::Correlate { out, cluster } => {
            pipeline::correlate(&out, cluster)?;
        }
        Command::Sbs { out } => {
            let r = pipeline::sbs(&out)?;
            println!("{}", r.ranking.join(" > "));
        }
        Command::Validate { out } => {
            let problems = pipeline::validate(&out)?;
            for p in &problems {
                eprintln!("{p}");
            }
            return Ok(problems.is_empty());
        }
        Command::ReplayTrace { out, sim } => {
            println!("{}", pipeline::replay(&out, sim)?.display());
        }
        Command::Export { out } => {
            for p in pipeline::export(&out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
