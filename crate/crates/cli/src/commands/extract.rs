use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use rayon::prelude::*;
use radiosynth_core::features::write_features;
use radiosynth_core::grid::{load_image, load_labels, write_atomic};
use radiosynth_core::{extract_features, CohortMatrix, FeatureVector};
use serde::Serialize;

use crate::config::RunConfig;
use crate::util::{csv_bytes, read_manifest, ManifestRow};
use crate::Outcome;

#[derive(Args, Debug, Serialize)]
pub struct ExtractArgs {
    /// Single-subject image
    #[arg(long, requires = "labels", conflicts_with = "manifest")]
    pub image: Option<PathBuf>,
    /// Single-subject label map
    #[arg(long, requires = "image")]
    pub labels: Option<PathBuf>,
    /// Subject id for single-subject mode
    #[arg(long, default_value = "subject")]
    pub subject: String,
    /// CSV with columns subject,image_path,labels_path
    #[arg(long, required_unless_present = "image")]
    pub manifest: Option<PathBuf>,
    /// Output file name inside the output directory
    #[arg(long, default_value = "features.csv")]
    pub output: String,
}

pub enum SubjectStatus {
    Ok(FeatureVector),
    Failed(String),
}

/// Loads and extracts one subject; failures are reported, not raised.
pub fn extract_subject(row: &ManifestRow, cfg: &RunConfig) -> SubjectStatus {
    let attempt = || -> Result<FeatureVector> {
        let image = load_image(&row.image, cfg.slice)?;
        let labels = load_labels(&row.labels, cfg.slice)?;
        let fv = extract_features(&image, &labels, &cfg.rois, &cfg.discretization)?;
        Ok(fv.with_source(row.image.display().to_string()))
    };
    match attempt() {
        Ok(fv) => SubjectStatus::Ok(fv),
        Err(e) => SubjectStatus::Failed(format!("{e:#}")),
    }
}

pub fn run(args: &ExtractArgs, cfg: &RunConfig) -> Result<Outcome> {
    let rows = match (&args.manifest, &args.image, &args.labels) {
        (Some(m), _, _) => read_manifest(m)?,
        (None, Some(i), Some(l)) => vec![ManifestRow {
            subject: args.subject.clone(),
            image: i.clone(),
            labels: l.clone(),
        }],
        _ => bail!("give either --manifest or both --image and --labels"),
    };
    if rows.is_empty() {
        eprintln!("manifest lists no subjects");
        return Ok(Outcome::Empty);
    }
    let results: Vec<SubjectStatus> = rows.par_iter().map(|r| extract_subject(r, cfg)).collect();

    let mut status_rows = Vec::new();
    let mut vectors = Vec::new();
    for (row, res) in rows.iter().zip(results) {
        match res {
            SubjectStatus::Ok(fv) => {
                let detail: Vec<String> = fv
                    .metadata
                    .absent
                    .iter()
                    .map(|a| format!("{}: {}", a.roi, a.reason))
                    .collect();
                let status = if detail.is_empty() { "ok" } else { "flagged" };
                status_rows.push(vec![row.subject.clone(), status.into(), detail.join("; ")]);
                vectors.push((row.subject.clone(), fv));
            }
            SubjectStatus::Failed(msg) => {
                eprintln!("{}: {msg}", row.subject);
                status_rows.push(vec![row.subject.clone(), "failed".into(), msg]);
            }
        }
    }
    let status_path = cfg.output_dir.join(format!("{}.status.csv", stem(&args.output)));
    write_atomic(&status_path, &csv_bytes(&["subject", "status", "detail"], &status_rows)?)?;

    if vectors.is_empty() {
        eprintln!("no subject could be extracted");
        return Ok(Outcome::Empty);
    }
    let (cohort, dropped) = CohortMatrix::from_vectors(&vectors, cfg.missing)?;
    for d in &dropped {
        eprintln!("{d}: dropped (missing ROI)");
    }
    if cohort.n_rows() == 0 {
        eprintln!("every subject lacks a configured ROI");
        return Ok(Outcome::Empty);
    }
    let metadata: BTreeMap<_, _> = vectors
        .into_iter()
        .filter(|(s, _)| cohort.subjects.contains(s))
        .map(|(s, fv)| (s, fv.metadata))
        .collect();
    write_features(cfg.output_dir.join(&args.output), &cohort, metadata, dropped)?;
    eprintln!(
        "extracted {} of {} subjects, {} features each",
        cohort.n_rows(),
        rows.len(),
        cohort.columns.len()
    );
    Ok(Outcome::Done)
}

fn stem(name: &str) -> &str {
    name.strip_suffix(".csv").unwrap_or(name)
}
