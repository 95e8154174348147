use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use radiosynth_core::evalstat::{family_report, Pairing, ReportOptions};
use radiosynth_core::features::read_features;
use radiosynth_core::grid::write_atomic;
use serde::Serialize;

use crate::config::{write_json, RunConfig};
use crate::util::derive_seed;
use crate::Outcome;

#[derive(Args, Debug, Serialize)]
pub struct EvaluateArgs {
    /// Features CSV of the real cohort
    #[arg(long)]
    pub real: PathBuf,
    /// Features CSV of the synthetic cohort
    #[arg(long)]
    pub synth: PathBuf,
    /// flattened | per-feature
    #[arg(long, default_value = "flattened")]
    pub pairing: Pairing,
    /// Permutation p-values with N shuffles instead of the t approximation
    #[arg(long, value_name = "N")]
    pub permutation: Option<usize>,
    /// Compare only subjects present in both cohorts
    #[arg(long)]
    pub common_subjects: bool,
    /// Output file name prefix
    #[arg(long, default_value = "report")]
    pub prefix: String,
}

pub fn run(args: &EvaluateArgs, cfg: &RunConfig) -> Result<Outcome> {
    let (mut real, _) = read_features(&args.real).with_context(|| format!("reading {}", args.real.display()))?;
    let (mut synth, _) = read_features(&args.synth).with_context(|| format!("reading {}", args.synth.display()))?;
    if args.common_subjects {
        let common: Vec<String> = real
            .subjects
            .iter()
            .filter(|s| synth.subjects.contains(s))
            .cloned()
            .collect();
        let skipped = real.n_rows() + synth.n_rows() - 2 * common.len();
        if skipped > 0 {
            eprintln!("comparing {} shared subjects ({skipped} rows without a partner)", common.len());
        }
        real = real.select_subjects(&common)?;
        synth = synth.select_subjects(&common)?;
    }
    let options = ReportOptions {
        pairing: args.pairing,
        permutations: args.permutation,
        seed: derive_seed(cfg.seed, "permutation"),
    };
    let report = family_report(&real, &synth, &options)?;
    for s in &report.skipped {
        eprintln!("skipped {}/{}: {}", s.roi, s.family.as_str(), s.reason);
    }
    let dir = &cfg.output_dir;
    write_atomic(dir.join(format!("{}.csv", args.prefix)), &report.to_csv()?)?;
    let text = report.to_text();
    write_atomic(dir.join(format!("{}.txt", args.prefix)), text.as_bytes())?;
    write_json(&dir.join(format!("{}.json", args.prefix)), &report)?;
    print!("{text}");
    Ok(if report.cells.is_empty() { Outcome::Empty } else { Outcome::Done })
}
