use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use radiosynth_core::features::write_features;
use radiosynth_core::grid::{load_image, load_labels, save_grid, save_pgm, write_atomic};
use radiosynth_core::synth::{
    conditioning_circle, replace_tumor, synthesize, target_report, tumor_roi, BlobParams, FillConfig, SynthConfig,
    SynthesisResult, TargetProfile, TargetSpec, TracePoint,
};
use radiosynth_core::features::format_value;
use radiosynth_core::{extract_features, CohortMatrix, MissingPolicy};
use serde::Serialize;

use crate::config::{write_json, RunConfig};
use crate::util::{auto_window, csv_bytes, derive_seed, fov_center, read_manifest, write_manifest, ManifestRow, Pair};
use crate::Outcome;

#[derive(Args, Debug, Serialize)]
pub struct SynthesizeArgs {
    /// Image to paint the tumor into
    #[arg(long, required_unless_present = "manifest", requires = "target")]
    pub background: Option<PathBuf>,
    /// TargetSpec JSON
    #[arg(long, requires = "background")]
    pub target: Option<PathBuf>,
    /// Conditioning circle center x,y in mm (default: field-of-view center)
    #[arg(long)]
    pub center: Option<Pair>,
    /// Overrides the target's mask_diameter_mm
    #[arg(long)]
    pub mask_diameter: Option<f64>,
    /// Regenerate every subject of a manifest: remove its tumor, then
    /// synthesize a new one conditioned on its own features
    #[arg(long, conflicts_with_all = ["background", "target", "center", "mask_diameter"])]
    pub manifest: Option<PathBuf>,
    /// Which extracted features become targets in manifest mode
    #[arg(long)]
    pub profile: Option<TargetProfile>,
    /// Output file name prefix
    #[arg(long, default_value = "synth")]
    pub prefix: String,
}

#[derive(Serialize)]
struct TargetLine {
    roi: String,
    feature: String,
    target: f64,
    achieved: Option<f64>,
}

#[derive(Serialize)]
struct ResultSummary<'a> {
    seed: u64,
    objective: f64,
    initial_objective: f64,
    evaluations: usize,
    accepted: usize,
    center_mm: (f64, f64),
    mask_diameter_mm: f64,
    pipeline: &'a [String],
    params: &'a BlobParams,
    targets: Vec<TargetLine>,
    trace: &'a [TracePoint],
}

fn summary<'a>(res: &'a SynthesisResult, target: &TargetSpec, center: (f64, f64)) -> ResultSummary<'a> {
    ResultSummary {
        seed: res.seed,
        objective: res.objective,
        initial_objective: res.initial_objective,
        evaluations: res.evaluations,
        accepted: res.accepted,
        center_mm: center,
        mask_diameter_mm: target.mask_diameter_mm,
        pipeline: &res.pipeline,
        params: &res.params,
        targets: target_report(target, &res.achieved)
            .into_iter()
            .map(|((roi, feature), (t, a))| TargetLine {
                roi,
                feature,
                target: t,
                achieved: a,
            })
            .collect(),
        trace: &res.trace,
    }
}

pub fn synth_config(cfg: &RunConfig, seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        budget: cfg.synthesis.budget,
        rois: cfg.rois.clone(),
        discretization: cfg.discretization,
        cooling: cfg.synthesis.cooling,
    }
}

/// Image, labels, preview, achieved features and the JSON trace of one result.
fn write_result(dir: &Path, stem: &str, subject: &str, res: &SynthesisResult, target: &TargetSpec, center: (f64, f64)) -> Result<()> {
    save_grid(&res.image, dir.join(format!("{stem}_image.flatgrid")))?;
    save_grid(&res.labels, dir.join(format!("{stem}_labels.flatgrid")))?;
    save_pgm(&res.image, dir.join(format!("{stem}_image.pgm")), auto_window(&res.image))?;
    let vectors = [(subject.to_string(), res.achieved.clone())];
    let (cohort, dropped) = CohortMatrix::from_vectors(&vectors, MissingPolicy::Drop)?;
    let meta = BTreeMap::from([(subject.to_string(), res.achieved.metadata.clone())]);
    write_features(dir.join(format!("{stem}_features.csv")), &cohort, meta, dropped)?;
    write_json(&dir.join(format!("{stem}_trace.json")), &summary(res, target, center))
}

pub fn run(args: &SynthesizeArgs, cfg: &mut RunConfig) -> Result<Outcome> {
    if let Some(p) = args.profile {
        cfg.synthesis.profile = p;
    }
    match (&args.manifest, &args.background, &args.target) {
        (Some(m), _, _) => run_batch(m, &args.prefix, cfg),
        (None, Some(bg), Some(t)) => run_single(args, bg, t, cfg),
        _ => bail!("give --background with --target, or --manifest"),
    }
}

fn run_single(args: &SynthesizeArgs, background: &Path, target: &Path, cfg: &RunConfig) -> Result<Outcome> {
    let image = load_image(background, cfg.slice)?;
    let mut spec = TargetSpec::load(target).with_context(|| format!("loading target {}", target.display()))?;
    if let Some(d) = args.mask_diameter {
        spec.mask_diameter_mm = d;
    }
    let center = args.center.map(|p| (p.0, p.1)).unwrap_or_else(|| fov_center(image.geometry()));
    let res = synthesize(&image, center, &spec, &synth_config(cfg, cfg.seed))?;
    write_result(&cfg.output_dir, &args.prefix, &args.prefix, &res, &spec, center)?;
    eprintln!(
        "objective {:.6} (initial {:.6}) after {} evaluations",
        res.objective, res.initial_objective, res.evaluations
    );
    Ok(Outcome::Done)
}

struct Regenerated {
    objective: f64,
    initial_objective: f64,
    evaluations: usize,
    seed: u64,
}

fn regenerate(row: &ManifestRow, prefix: &str, cfg: &RunConfig) -> Result<Regenerated> {
    let image = load_image(&row.image, cfg.slice)?;
    let labels = load_labels(&row.labels, cfg.slice)?;
    let fv = extract_features(&image, &labels, &cfg.rois, &cfg.discretization)?;
    if let Some(a) = fv.metadata.absent.first() {
        bail!("ROI {} unavailable: {}", a.roi, a.reason);
    }
    let (center, diameter) = conditioning_circle(&labels, &tumor_roi(), cfg.synthesis.mask_scale)?;
    let spec = TargetSpec::from_features(&fv, cfg.synthesis.profile, diameter);
    let fill = FillConfig {
        noise: cfg.fill.noise,
        seed: derive_seed(cfg.seed, &format!("fill/{}", row.subject)),
        ..FillConfig::default()
    };
    let seed = derive_seed(cfg.seed, &format!("synth/{}", row.subject));
    let rep = replace_tumor(&image, &labels, center, Some(&spec), &fill, &synth_config(cfg, seed))?;
    let res = rep.synthesis.context("synthesis produced no result")?;
    let stem = format!("{}_{prefix}", row.subject);
    write_result(&cfg.output_dir, &stem, &row.subject, &res, &spec, center)?;
    Ok(Regenerated {
        objective: res.objective,
        initial_objective: res.initial_objective,
        evaluations: res.evaluations,
        seed,
    })
}

fn run_batch(manifest: &Path, prefix: &str, cfg: &RunConfig) -> Result<Outcome> {
    let rows = read_manifest(manifest)?;
    if rows.is_empty() {
        eprintln!("manifest lists no subjects");
        return Ok(Outcome::Empty);
    }
    let results: Vec<Result<Regenerated>> = rows.par_iter().map(|r| regenerate(r, prefix, cfg)).collect();

    let mut manifest_rows = Vec::new();
    let mut summary_rows = Vec::new();
    for (row, res) in rows.iter().zip(results) {
        let s = &row.subject;
        match res {
            Ok(r) => {
                manifest_rows.push((
                    s.clone(),
                    format!("{s}_{prefix}_image.flatgrid"),
                    format!("{s}_{prefix}_labels.flatgrid"),
                ));
                summary_rows.push(vec![
                    s.clone(),
                    "ok".into(),
                    format_value(r.objective),
                    format_value(r.initial_objective),
                    r.evaluations.to_string(),
                    r.seed.to_string(),
                    String::new(),
                ]);
            }
            Err(e) => {
                eprintln!("{s}: {e:#}");
                summary_rows.push(vec![
                    s.clone(),
                    "failed".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("{e:#}"),
                ]);
            }
        }
    }
    let dir = &cfg.output_dir;
    write_atomic(
        dir.join(format!("{prefix}_summary.csv")),
        &csv_bytes(
            &["subject", "status", "objective", "initial_objective", "evaluations", "seed", "detail"],
            &summary_rows,
        )?,
    )?;
    if manifest_rows.is_empty() {
        eprintln!("no subject could be regenerated");
        return Ok(Outcome::Empty);
    }
    write_manifest(&dir.join(format!("{prefix}_manifest.csv")), &manifest_rows)?;
    eprintln!("regenerated {} of {} subjects", manifest_rows.len(), rows.len());
    Ok(Outcome::Done)
}
