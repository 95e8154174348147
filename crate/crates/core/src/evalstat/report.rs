use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{cosine, pearson, permutation_p, spearman, CorrelationKind};
use crate::error::{Error, Result};
use crate::features::{CohortMatrix, Family};

/// How paired samples are formed inside one (ROI, family) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// All standardized subject x feature values of the cell, flattened.
    #[default]
    Flattened,
    /// Statistics per feature across subjects, then averaged over features.
    PerFeature,
}

impl std::str::FromStr for Pairing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flattened" => Ok(Self::Flattened),
            "per-feature" => Ok(Self::PerFeature),
            _ => Err(Error::InvalidArgument(format!("unknown pairing '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportOptions {
    pub pairing: Pairing,
    /// Replace the t-approximation p-values by permutation p-values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub roi: String,
    pub family: Family,
    pub cosine: f64,
    pub pearson_r: f64,
    pub pearson_p: f64,
    pub spearman_rho: f64,
    pub spearman_p: f64,
    /// Paired samples behind the statistics.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub roi: String,
    pub family: Family,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub cells: Vec<Cell>,
    pub skipped: Vec<SkippedCell>,
    pub options: ReportOptions,
    pub subjects: usize,
    /// Short description of the aggregation rule.
    pub aggregation: String,
    pub standardization: String,
}

/// Table 1 style comparison of a synthetic cohort against a real one. Both
/// cohorts are z-scored with the real cohort's column statistics.
pub fn family_report(real: &CohortMatrix, synth: &CohortMatrix, options: &ReportOptions) -> Result<SimilarityReport> {
    real.validate()?;
    synth.validate()?;
    if real.columns != synth.columns {
        return Err(Error::Schema("real and synthetic cohorts have different columns".into()));
    }
    let mut a = real.subjects.clone();
    let mut b = synth.subjects.clone();
    a.sort();
    b.sort();
    if a != b {
        return Err(Error::Schema("real and synthetic cohorts have different subjects".into()));
    }
    if a.len() < 3 {
        return Err(Error::Degenerate(format!("need at least 3 subjects, got {}", a.len())));
    }
    // Canonical subject order makes every cell independent of row order.
    let real = real.select_subjects(&a)?;
    let synth = synth.select_subjects(&a)?;
    let transforms = real.column_stats();
    let zr = real.standardize_with(&transforms)?;
    let zs = synth.standardize_with(&transforms)?;

    let mut groups: Vec<(String, Family, Vec<usize>)> = Vec::new();
    for (j, c) in real.columns.iter().enumerate() {
        match groups.iter_mut().find(|g| g.0 == c.roi && g.1 == c.family) {
            Some(g) => g.2.push(j),
            None => groups.push((c.roi.clone(), c.family, vec![j])),
        }
    }

    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for (roi, family, cols) in groups {
        // Constant real columns carry no information after standardization.
        let cols: Vec<usize> = cols.into_iter().filter(|&j| !transforms[j].zero_variance).collect();
        let outcome = match options.pairing {
            Pairing::Flattened => flattened_cell(&zr, &zs, &cols, options),
            Pairing::PerFeature => per_feature_cell(&zr, &zs, &cols, options),
        };
        match outcome {
            Ok(s) => cells.push(Cell {
                roi,
                family,
                cosine: s.0,
                pearson_r: s.1,
                pearson_p: s.2,
                spearman_rho: s.3,
                spearman_p: s.4,
                n: s.5,
            }),
            Err(e) => skipped.push(SkippedCell {
                roi,
                family,
                reason: e.to_string(),
            }),
        }
    }
    Ok(SimilarityReport {
        cells,
        skipped,
        options: *options,
        subjects: a.len(),
        aggregation: match options.pairing {
            Pairing::Flattened => "flattened standardized subject x feature pairs per cell".into(),
            Pairing::PerFeature => "per-feature statistics across subjects, averaged per cell".into(),
        },
        standardization: "z-scores from the real cohort's population mean and std".into(),
    })
}

type Stats = (f64, f64, f64, f64, f64, usize);

fn p_values(u: &[f64], v: &[f64], t_p: (f64, f64), options: &ReportOptions) -> Result<(f64, f64)> {
    match options.permutations {
        None => Ok(t_p),
        Some(k) => Ok((
            permutation_p(u, v, CorrelationKind::Pearson, k, options.seed)?,
            permutation_p(u, v, CorrelationKind::Spearman, k, options.seed)?,
        )),
    }
}

fn flattened_cell(zr: &CohortMatrix, zs: &CohortMatrix, cols: &[usize], options: &ReportOptions) -> Result<Stats> {
    let mut u = Vec::with_capacity(cols.len() * zr.n_rows());
    let mut v = Vec::with_capacity(u.capacity());
    for (ra, rb) in zr.values.iter().zip(&zs.values) {
        for &j in cols {
            u.push(ra[j]);
            v.push(rb[j]);
        }
    }
    if u.len() < 3 {
        return Err(Error::Degenerate("fewer than 3 informative values".into()));
    }
    let c = cosine(&u, &v)?;
    let p = pearson(&u, &v)?;
    let s = spearman(&u, &v)?;
    let (pp, sp) = p_values(&u, &v, (p.p, s.p), options)?;
    Ok((c, p.r, pp, s.r, sp, u.len()))
}

fn per_feature_cell(zr: &CohortMatrix, zs: &CohortMatrix, cols: &[usize], options: &ReportOptions) -> Result<Stats> {
    let n = zr.n_rows();
    let mut acc = [0.0f64; 5];
    let mut used = 0usize;
    for &j in cols {
        let u = zr.column(j);
        let v = zs.column(j);
        let (Ok(c), Ok(p), Ok(s)) = (cosine(&u, &v), pearson(&u, &v), spearman(&u, &v)) else {
            continue;
        };
        let (pp, sp) = p_values(&u, &v, (p.p, s.p), options)?;
        for (a, x) in acc.iter_mut().zip([c, p.r, pp, s.r, sp]) {
            *a += x;
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::Degenerate("no feature with variation in both cohorts".into()));
    }
    let m = acc.map(|a| a / used as f64);
    Ok((m[0], m[1], m[2], m[3], m[4], n))
}

const STAR_P: f64 = 1e-4;

impl SimilarityReport {
    pub fn cell(&self, roi: &str, family: Family) -> Option<&Cell> {
        self.cells.iter().find(|c| c.roi == roi && c.family == family)
    }

    /// `roi,family,metric,value,p,n`; cosine rows leave `p` empty.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["roi", "family", "metric", "value", "p", "n"])?;
        for c in &self.cells {
            let n = c.n.to_string();
            let fam = c.family.as_str();
            w.write_record([c.roi.as_str(), fam, "cosine", &fmt(c.cosine), "", &n])?;
            w.write_record([c.roi.as_str(), fam, "pearson", &fmt(c.pearson_r), &fmt(c.pearson_p), &n])?;
            w.write_record([c.roi.as_str(), fam, "spearman", &fmt(c.spearman_rho), &fmt(c.spearman_p), &n])?;
        }
        w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// Aligned text table: one row per metric, one column per (ROI, family)
    /// cell, `*` marking p < 0.0001.
    pub fn to_text(&self) -> String {
        let mut rois: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !rois.contains(&c.roi.as_str()) {
                rois.push(&c.roi);
            }
        }
        let width = 11;
        let label_w = 22;
        let mut out = String::new();
        let _ = write!(out, "{:label_w$}", "");
        for r in &rois {
            let span = self.cells.iter().filter(|c| c.roi == *r).count() * width;
            let _ = write!(out, "{:^span$}", r.to_uppercase());
        }
        out.push('\n');
        let _ = write!(out, "{:label_w$}", "");
        for r in &rois {
            for c in self.cells.iter().filter(|c| c.roi == *r) {
                let _ = write!(out, "{:>width$}", c.family.display_name());
            }
        }
        out.push('\n');
        type Pick = fn(&Cell) -> (f64, Option<f64>);
        let rows: [(&str, Pick); 3] = [
            ("Cosine Similarity", |c| (c.cosine, None)),
            ("Pearson Correlation", |c| (c.pearson_r, Some(c.pearson_p))),
            ("Spearman Correlation", |c| (c.spearman_rho, Some(c.spearman_p))),
        ];
        for (label, pick) in rows {
            let _ = write!(out, "{label:label_w$}");
            for r in &rois {
                for c in self.cells.iter().filter(|c| c.roi == *r) {
                    let (v, p) = pick(c);
                    let star = if p.is_some_and(|p| p < STAR_P) { "*" } else { " " };
                    let _ = write!(out, "{:>w$}{star}", format!("{v:.4}"), w = width - 1);
                }
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\n* p < 0.0001; n = {} subjects; pairing: {}",
            self.subjects, self.aggregation
        );
        for s in &self.skipped {
            let _ = writeln!(out, "skipped {} {}: {}", s.roi, s.family, s.reason);
        }
        out
    }
}

fn fmt(v: f64) -> String {
    crate::features::format_value(v)
}
