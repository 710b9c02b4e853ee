use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plab::report::{run, OutputPaths, RunConfig, Stage, EXIT_CONFIG_ERROR, EXIT_STAGE_ERROR};

#[derive(Parser)]
#[command(name = "plab", version, about = "Growth analysis of Poincaré-type difference equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis stages of a configuration file.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Stage to run; repeatable. Defaults to profile, envelope and filtration.
        #[arg(long = "stage")]
        stages: Vec<String>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Directory for report.json, timings.json and csv/.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let Command::Analyze { config, stages, horizon, seed, epsilon, out } = Cli::parse().command;
    let mut cfg = match RunConfig::from_file(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("plab: {e}");
            return ExitCode::from(EXIT_CONFIG_ERROR as u8);
        }
    };
    if !stages.is_empty() {
        match stages.iter().map(|s| Stage::parse(s)).collect() {
            Ok(s) => cfg.stages = s,
            Err(e) => {
                eprintln!("plab: {e}");
                return ExitCode::from(EXIT_CONFIG_ERROR as u8);
            }
        }
    }
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if epsilon.is_some() {
        cfg.epsilon = epsilon;
    }
    if let Some(dir) = &out {
        cfg.output = OutputPaths::in_dir(dir);
    }

    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("plab: {e}");
            return ExitCode::from(EXIT_CONFIG_ERROR as u8);
        }
    };
    if cfg.output.report.is_none() && cfg.output.csv_dir.is_none() {
        match report.to_json() {
            Ok(text) => print!("{text}"),
            Err(e) => {
                eprintln!("plab: {e}");
                return ExitCode::from(EXIT_STAGE_ERROR as u8);
            }
        }
    } else if let Err(e) = report.write(&cfg.output) {
        eprintln!("plab: cannot write outputs: {e}");
        return ExitCode::from(EXIT_STAGE_ERROR as u8);
    }
    for failure in &report.stage_errors {
        eprintln!("plab: stage {} failed: {}", failure.stage.name(), failure.message);
    }
    for v in &report.violations {
        eprintln!("plab: violation: {v}");
    }
    ExitCode::from(report.exit_code() as u8)
}
