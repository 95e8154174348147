//! `radiosynth`: batch radiomics extraction, tumor synthesis and removal,
//! and cohort similarity reports.

mod commands;
mod config;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "radiosynth", version, about = "Radiomics extraction and feature-conditioned tumor synthesis")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. They override the JSON config.
#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core)
    #[arg(long, short, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Synthesis objective evaluations per tumor
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Axial slice of 3D NIfTI inputs
    #[arg(long, global = true)]
    slice: Option<usize>,
    /// Fixed gray-level bin width
    #[arg(long, global = true)]
    bin_width: Option<f64>,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Extract per-ROI radiomics features into a features CSV
    Extract(commands::extract::ExtractArgs),
    /// Synthesize a tumor matching target features (or regenerate a cohort)
    Synthesize(commands::synthesize::SynthesizeArgs),
    /// Remove a tumor by harmonic background fill
    Remove(commands::remove::RemoveArgs),
    /// Compare a synthetic cohort against a real one
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Generate phantom images with planted tumors
    Phantom(commands::phantom::PhantomArgs),
    /// Sweep pixel surface against sphericity into a montage
    Grid(commands::grid::GridArgs),
}

/// What a command produced, mapped to the process exit code.
pub enum Outcome {
    Done,
    /// Nothing usable came out (exit code 2).
    Empty,
}

fn resolve_config(common: &CommonArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(j) = common.jobs {
        cfg.jobs = j;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(b) = common.budget {
        cfg.synthesis.budget = b;
    }
    if common.slice.is_some() {
        cfg.slice = common.slice;
    }
    if let Some(w) = common.bin_width {
        cfg.discretization = radiosynth_core::DiscretizationConfig::FixedBinWidth { bin_width: w };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let mut cfg = resolve_config(&cli.common)?;
    util::ensure_dir(&cfg.output_dir)?;
    let name = match &cli.command {
        Command::Extract(_) => "extract",
        Command::Synthesize(_) => "synthesize",
        Command::Remove(_) => "remove",
        Command::Evaluate(_) => "evaluate",
        Command::Phantom(_) => "phantom",
        Command::Grid(_) => "grid",
    };
    let pool = util::thread_pool(cfg.jobs)?;
    let outcome = pool.install(|| match &cli.command {
        Command::Extract(a) => commands::extract::run(a, &cfg),
        Command::Synthesize(a) => commands::synthesize::run(a, &mut cfg),
        Command::Remove(a) => commands::remove::run(a, &mut cfg),
        Command::Evaluate(a) => commands::evaluate::run(a, &cfg),
        Command::Phantom(a) => commands::phantom::run(a, &cfg),
        Command::Grid(a) => commands::grid::run(a, &cfg),
    })?;
    cfg.archive(name, &cli.command)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Empty) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
