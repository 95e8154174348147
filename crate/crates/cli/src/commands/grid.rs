use std::path::PathBuf;

use anyhow::{ensure, Result};
use clap::Args;
use rayon::prelude::*;
use radiosynth_core::features::format_value;
use radiosynth_core::grid::{encode_pgm, load_image, window_bytes, write_atomic};
use radiosynth_core::synth::{synthesize, FeatureTarget, TargetSpec};
use radiosynth_core::ImageGrid;
use serde::Serialize;

use crate::commands::synthesize::synth_config;
use crate::config::RunConfig;
use crate::util::{csv_bytes, fov_center, Pair};
use crate::Outcome;

/// Pixels between montage tiles.
const GAP: usize = 2;
/// Side of the checkerboard squares marking failed tiles.
const CHECKER: usize = 4;

#[derive(Args, Debug, Serialize)]
pub struct GridArgs {
    #[arg(long)]
    pub background: PathBuf,
    /// Target pixel surfaces in mm² (columns)
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub surface: Vec<f64>,
    /// Target sphericities (rows)
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub sphericity: Vec<f64>,
    /// Tumor center x,y in mm (default: field-of-view center)
    #[arg(long)]
    pub center: Option<Pair>,
    /// Output file name prefix
    #[arg(long, default_value = "grid")]
    pub prefix: String,
}

/// The target of one cell. The circle leaves room for a disk of the target
/// area inflated by the irregularity that low sphericity demands.
pub fn cell_target(surface: f64, sphericity: f64, mask_scale: f64) -> TargetSpec {
    let equivalent_diameter = 2.0 * (surface / std::f64::consts::PI).sqrt();
    TargetSpec {
        mask_diameter_mm: mask_scale * equivalent_diameter / (sphericity * sphericity),
        targets: vec![
            FeatureTarget::new("roi2", "pixel_surface", surface),
            FeatureTarget::new("roi2", "sphericity", sphericity),
        ],
    }
}

struct CellResult {
    image: ImageGrid,
    surface: f64,
    sphericity: f64,
    objective: f64,
    evaluations: usize,
}

fn sorted_axis(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

pub fn run(args: &GridArgs, cfg: &RunConfig) -> Result<Outcome> {
    ensure!(
        args.surface.iter().all(|&a| a > 0.0 && a.is_finite()),
        "surface values must be positive"
    );
    ensure!(
        args.sphericity.iter().all(|&s| s > 0.0 && s <= 1.0),
        "sphericity values must lie in (0, 1]"
    );
    let surfaces = sorted_axis(&args.surface);
    let sphericities = sorted_axis(&args.sphericity);
    let image = load_image(&args.background, cfg.slice)?;
    let g = *image.geometry();
    let center = args.center.map(|p| (p.0, p.1)).unwrap_or_else(|| fov_center(&g));

    let cells: Vec<(usize, usize)> = (0..sphericities.len())
        .flat_map(|r| (0..surfaces.len()).map(move |c| (r, c)))
        .collect();
    let results: Vec<Result<CellResult, String>> = cells
        .par_iter()
        .map(|&(r, c)| {
            let spec = cell_target(surfaces[c], sphericities[r], cfg.synthesis.mask_scale);
            let res = synthesize(&image, center, &spec, &synth_config(cfg, cfg.seed)).map_err(|e| e.to_string())?;
            let get = |f: &str| res.achieved.get("roi2", f).ok_or_else(|| format!("achieved tumor lacks {f}"));
            Ok(CellResult {
                surface: get("pixel_surface")?,
                sphericity: get("sphericity")?,
                objective: res.objective,
                evaluations: res.evaluations,
                image: res.image,
            })
        })
        .collect();

    // Tiles: the largest conditioning circle around the center, clipped to the grid.
    let d_max = cells
        .iter()
        .map(|&(r, c)| cell_target(surfaces[c], sphericities[r], cfg.synthesis.mask_scale).mask_diameter_mm)
        .fold(0.0, f64::max);
    let tw = ((d_max / g.spacing_x).ceil() as usize + 4).min(g.width);
    let th = ((d_max / g.spacing_y).ceil() as usize + 4).min(g.height);
    let clamp_origin = |center_mm: f64, spacing: f64, tile: usize, extent: usize| {
        let mid = (center_mm / spacing).round().max(0.0) as usize;
        mid.saturating_sub(tile / 2).min(extent - tile)
    };
    let (c0, r0) = (
        clamp_origin(center.0, g.spacing_x, tw, g.width),
        clamp_origin(center.1, g.spacing_y, th, g.height),
    );
    let bg_tile = image.crop(c0, r0, tw, th)?;
    let mut tiles = Vec::with_capacity(results.len());
    let (mut lo, mut hi) = bounds(&bg_tile);
    for res in &results {
        let tile = match res {
            Ok(cell) => {
                let t = cell.image.crop(c0, r0, tw, th)?;
                let (a, b) = bounds(&t);
                lo = lo.min(a);
                hi = hi.max(b);
                Some(t)
            }
            Err(_) => None,
        };
        tiles.push(tile);
    }
    if lo >= hi {
        hi = lo + 1.0;
    }

    let (cols, rows) = (surfaces.len(), sphericities.len());
    let mw = cols * tw + (cols - 1) * GAP;
    let mh = rows * th + (rows - 1) * GAP;
    let mut montage = vec![0u8; mw * mh];
    for (&(r, c), tile) in cells.iter().zip(&tiles) {
        let pixels = match tile {
            Some(t) => window_bytes(t, lo, hi)?,
            None => (0..tw * th)
                .map(|i| if ((i % tw) / CHECKER + (i / tw) / CHECKER).is_multiple_of(2) { 64 } else { 192 })
                .collect(),
        };
        let (x0, y0) = (c * (tw + GAP), r * (th + GAP));
        for y in 0..th {
            let dst = (y0 + y) * mw + x0;
            montage[dst..dst + tw].copy_from_slice(&pixels[y * tw..(y + 1) * tw]);
        }
    }
    let dir = &cfg.output_dir;
    write_atomic(dir.join(format!("{}_montage.pgm", args.prefix)), &encode_pgm(mw, mh, &montage))?;

    let mut succeeded = 0;
    let rows_out: Vec<Vec<String>> = cells
        .iter()
        .zip(&results)
        .map(|(&(r, c), res)| {
            let (a, s) = (surfaces[c], sphericities[r]);
            let d = cell_target(a, s, cfg.synthesis.mask_scale).mask_diameter_mm;
            let mut row = vec![r.to_string(), c.to_string(), format_value(a), format_value(s), format_value(d)];
            match res {
                Ok(cell) => {
                    succeeded += 1;
                    row.extend([
                        "ok".to_string(),
                        format_value(cell.surface),
                        format_value(cell.sphericity),
                        format_value((cell.surface - a).abs() / a),
                        format_value((cell.sphericity - s).abs()),
                        format_value(cell.objective),
                        cell.evaluations.to_string(),
                        String::new(),
                    ]);
                }
                Err(e) => {
                    eprintln!("cell ({r}, {c}) failed: {e}");
                    row.extend(["failed".to_string()].into_iter().chain(std::iter::repeat_n(String::new(), 6)));
                    row.push(e.clone());
                }
            }
            row
        })
        .collect();
    write_atomic(
        dir.join(format!("{}_cells.csv", args.prefix)),
        &csv_bytes(
            &[
                "row",
                "col",
                "target_pixel_surface",
                "target_sphericity",
                "mask_diameter_mm",
                "status",
                "achieved_pixel_surface",
                "achieved_sphericity",
                "surface_rel_error",
                "sphericity_abs_error",
                "objective",
                "evaluations",
                "detail",
            ],
            &rows_out,
        )?,
    )?;
    eprintln!("{succeeded} of {} cells synthesized", cells.len());
    Ok(if 2 * succeeded >= cells.len() { Outcome::Done } else { Outcome::Empty })
}

fn bounds(image: &ImageGrid) -> (f64, f64) {
    image
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}
