use anyhow::{ensure, Result};
use clap::Args;
use rayon::prelude::*;
use radiosynth_core::grid::save_grid;
use radiosynth_core::synth::{make_phantom, BlobParams};
use radiosynth_core::GridGeometry;
use serde::Serialize;

use crate::config::{write_json, RunConfig};
use crate::util::{write_manifest, Pair};
use crate::Outcome;

#[derive(Args, Debug, Serialize)]
pub struct PhantomArgs {
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    /// Pixel spacing x,y in mm
    #[arg(long, default_value = "1,1")]
    pub spacing: Pair,
    /// Subject id prefix
    #[arg(long, default_value = "phantom")]
    pub prefix: String,
}

#[derive(Serialize)]
struct Planted {
    subject: String,
    seed: u64,
    params: BlobParams,
}

pub fn run(args: &PhantomArgs, cfg: &RunConfig) -> Result<Outcome> {
    ensure!(args.count >= 1, "--count must be at least 1");
    let geometry = GridGeometry::new(args.width, args.height, args.spacing.0, args.spacing.1)?;
    let digits = (args.count - 1).to_string().len().max(3);
    let subjects: Vec<(String, u64)> = (0..args.count)
        .map(|i| (format!("{}_{i:0digits$}", args.prefix), cfg.seed.wrapping_add(i as u64)))
        .collect();

    let planted = subjects
        .par_iter()
        .map(|(subject, seed)| -> Result<Planted> {
            let p = make_phantom(*seed, geometry)?;
            save_grid(&p.image, cfg.output_dir.join(format!("{subject}_image.flatgrid")))?;
            save_grid(&p.labels, cfg.output_dir.join(format!("{subject}_labels.flatgrid")))?;
            Ok(Planted {
                subject: subject.clone(),
                seed: *seed,
                params: p.params,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<(String, String, String)> = subjects
        .iter()
        .map(|(s, _)| (s.clone(), format!("{s}_image.flatgrid"), format!("{s}_labels.flatgrid")))
        .collect();
    write_manifest(&cfg.output_dir.join("manifest.csv"), &rows)?;
    write_json(&cfg.output_dir.join("phantoms.json"), &planted)?;
    eprintln!("wrote {} phantoms to {}", args.count, cfg.output_dir.display());
    Ok(Outcome::Done)
}
