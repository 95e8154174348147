use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use radiosynth_core::grid::{load_image, load_labels, save_grid, save_pgm};
use radiosynth_core::roi::mask_from_labels;
use radiosynth_core::synth::{background_fill, random_circular_mask, tumor_roi, FillConfig};
use radiosynth_core::LabelGrid;
use serde::Serialize;

use crate::config::{write_json, RunConfig};
use crate::util::{auto_window, derive_seed, Pair};
use crate::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Toggle {
    On,
    Off,
}

#[derive(Args, Debug, Serialize)]
pub struct RemoveArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Label map whose tumor labels {1,2,4} are removed
    #[arg(long, required_unless_present = "random_mask")]
    pub labels: Option<PathBuf>,
    /// Boundary-matched texture noise inside the filled region
    #[arg(long, value_enum)]
    pub noise: Option<Toggle>,
    /// Fill a seeded random circle instead of the tumor
    #[arg(long)]
    pub random_mask: bool,
    /// Random circle diameter range lo,hi in mm
    #[arg(long, requires = "random_mask")]
    pub mask_diameter_range: Option<Pair>,
    /// Output file name prefix
    #[arg(long, default_value = "filled")]
    pub prefix: String,
}

#[derive(Serialize)]
struct FillReport {
    mask: &'static str,
    mask_pixels: usize,
    iterations: usize,
    residual: f64,
    boundary_range: f64,
    noise_std: f64,
    converged: bool,
    noise_seed: u64,
}

pub fn run(args: &RemoveArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    if let Some(t) = args.noise {
        cfg.fill.noise = t == Toggle::On;
    }
    if let Some(Pair(lo, hi)) = args.mask_diameter_range {
        cfg.fill.random_mask_diameter = (lo, hi);
        cfg.validate()?;
    }
    let image = load_image(&args.image, cfg.slice)?;
    let labels = args.labels.as_ref().map(|p| load_labels(p, cfg.slice)).transpose()?;
    let g = *image.geometry();
    let (mask, kind) = if args.random_mask {
        let seed = derive_seed(cfg.seed, "random-mask");
        (random_circular_mask(&g, seed, cfg.fill.random_mask_diameter)?, "random_circle")
    } else {
        let labels = labels.as_ref().context("--labels is required")?;
        (mask_from_labels(labels, &tumor_roi()), "tumor")
    };
    let fill = FillConfig {
        noise: cfg.fill.noise,
        seed: derive_seed(cfg.seed, "fill"),
        ..FillConfig::default()
    };
    let out = background_fill(&image, &mask, &fill)?;
    if !out.converged {
        eprintln!("warning: fill stopped at the iteration cap (residual {:e})", out.residual);
    }

    let dir = &cfg.output_dir;
    save_grid(&out.image, dir.join(format!("{}_image.flatgrid", args.prefix)))?;
    save_pgm(&out.image, dir.join(format!("{}_image.pgm", args.prefix)), auto_window(&image))?;
    if let Some(labels) = labels {
        // Removed tumor pixels become background; a random circle leaves labels alone.
        let cleaned = if args.random_mask {
            labels
        } else {
            LabelGrid::background(g)?
        };
        save_grid(&cleaned, dir.join(format!("{}_labels.flatgrid", args.prefix)))?;
    }
    write_json(
        &dir.join(format!("{}_fill.json", args.prefix)),
        &FillReport {
            mask: kind,
            mask_pixels: mask.pixel_count(),
            iterations: out.iterations,
            residual: out.residual,
            boundary_range: out.boundary_range,
            noise_std: out.noise_std,
            converged: out.converged,
            noise_seed: fill.seed,
        },
    )?;
    eprintln!("filled {} pixels in {} iterations", mask.pixel_count(), out.iterations);
    Ok(Outcome::Done)
}
