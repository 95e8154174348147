//! Similarity between real and synthetic feature cohorts: cosine, Pearson
//! and Spearman statistics per (ROI, feature family) cell.

mod report;

pub use report::{family_report, Cell, Pairing, ReportOptions, SimilarityReport, SkippedCell};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// A correlation coefficient with its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

fn check_pair(u: &[f64], v: &[f64], min_len: usize) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::InvalidArgument(format!("length mismatch: {} vs {}", u.len(), v.len())));
    }
    if u.len() < min_len {
        return Err(Error::InvalidArgument(format!("need at least {min_len} pairs, got {}", u.len())));
    }
    if u.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample".into()));
    }
    Ok(())
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    check_pair(u, v, 1)?;
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Degenerate("cosine of a zero-norm vector".into()));
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

fn correlation_coefficient(u: &[f64], v: &[f64]) -> Result<f64> {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (da, db) = (a - mu, b - mv);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("correlation with a constant vector".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value of a correlation `r` over `n` pairs under the Student t
/// approximation with `n - 2` degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    assert!(n >= 3, "p-value needs n >= 3");
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    // P(|T| >= t) = I_{df/(df+t^2)}(df/2, 1/2) and df/(df+t^2) = 1 - r^2.
    beta_reg(df / 2.0, 0.5, 1.0 - r * r).clamp(0.0, 1.0)
}

/// Two-sided p-value of a Student t statistic with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

pub fn pearson(u: &[f64], v: &[f64]) -> Result<Correlation> {
    check_pair(u, v, 3)?;
    let r = correlation_coefficient(u, v)?;
    Ok(Correlation {
        r,
        p: correlation_p_value(r, u.len()),
        n: u.len(),
    })
}

/// 1-based ranks; tied values share the average of their ranks.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(u: &[f64], v: &[f64]) -> Result<Correlation> {
    check_pair(u, v, 3)?;
    let r = correlation_coefficient(&average_ranks(u), &average_ranks(v))
        .map_err(|_| Error::Degenerate("Spearman correlation with an all-tied vector".into()))?;
    Ok(Correlation {
        r,
        p: correlation_p_value(r, u.len()),
        n: u.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

/// Permutation p-value of `|r|`: `(1 + #{|r_perm| >= |r|}) / (1 + permutations)`,
/// permuting `v` with a seeded generator.
pub fn permutation_p(u: &[f64], v: &[f64], kind: CorrelationKind, permutations: usize, seed: u64) -> Result<f64> {
    check_pair(u, v, 3)?;
    if permutations == 0 {
        return Err(Error::InvalidArgument("need at least one permutation".into()));
    }
    let (a, b) = match kind {
        CorrelationKind::Pearson => (u.to_vec(), v.to_vec()),
        CorrelationKind::Spearman => (average_ranks(u), average_ranks(v)),
    };
    let observed = correlation_coefficient(&a, &b)?.abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = b.clone();
    let mut hits = 0usize;
    for _ in 0..permutations {
        shuffled.shuffle(&mut rng);
        // Allow for rounding when a permutation reproduces the observed order.
        if correlation_coefficient(&a, &shuffled)?.abs() >= observed - 1e-12 {
            hits += 1;
        }
    }
    Ok((1 + hits) as f64 / (1 + permutations) as f64)
}
