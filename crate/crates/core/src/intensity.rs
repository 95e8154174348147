//! Gray-level discretization and first-order (histogram) statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DiscretizationConfig {
    FixedBinWidth { bin_width: f64 },
    FixedBinCount { bin_count: usize },
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig::FixedBinWidth { bin_width: 25.0 }
    }
}

impl DiscretizationConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DiscretizationConfig::FixedBinWidth { bin_width } if !(bin_width > 0.0 && bin_width.is_finite()) => {
                Err(Error::InvalidArgument(format!("bin_width must be > 0, got {bin_width}")))
            }
            DiscretizationConfig::FixedBinCount { bin_count } if bin_count < 2 => {
                Err(Error::InvalidArgument(format!("bin_count must be >= 2, got {bin_count}")))
            }
            _ => Ok(()),
        }
    }
}

/// Discretized gray levels (1-based) and the number of levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discretized {
    pub bins: Vec<usize>,
    pub n_levels: usize,
}

/// Maps values to gray levels `1..=n_levels`, anchored at the minimum.
pub fn discretize(values: &[f64], config: &DiscretizationConfig) -> Result<Discretized> {
    config.validate()?;
    if values.is_empty() {
        return Err(Error::EmptyInput("cannot discretize an empty value set".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(Discretized {
            bins: vec![1; values.len()],
            n_levels: 1,
        });
    }
    let bins: Vec<usize> = match *config {
        DiscretizationConfig::FixedBinWidth { bin_width } => values
            .iter()
            .map(|&x| ((x - min) / bin_width).floor() as usize + 1)
            .collect(),
        DiscretizationConfig::FixedBinCount { bin_count } => {
            let span = max - min;
            values
                .iter()
                .map(|&x| (((x - min) / span * bin_count as f64).floor() as usize + 1).min(bin_count))
                .collect()
        }
    };
    let n_levels = bins.iter().copied().max().unwrap_or(1);
    Ok(Discretized { bins, n_levels })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderFeatures {
    pub energy: f64,
    pub total_energy: f64,
    pub entropy: f64,
    pub minimum: f64,
    pub p10: f64,
    pub p90: f64,
    pub maximum: f64,
    pub mean: f64,
    pub median: f64,
    pub interquartile_range: f64,
    pub range: f64,
    pub mean_absolute_deviation: f64,
    pub robust_mean_absolute_deviation: f64,
    pub root_mean_squared: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub variance: f64,
    pub uniformity: f64,
}

impl FirstOrderFeatures {
    pub const NAMES: [&'static str; 18] = [
        "energy",
        "entropy",
        "interquartile_range",
        "kurtosis",
        "maximum",
        "mean",
        "mean_absolute_deviation",
        "median",
        "minimum",
        "p10",
        "p90",
        "range",
        "robust_mean_absolute_deviation",
        "root_mean_squared",
        "skewness",
        "total_energy",
        "uniformity",
        "variance",
    ];

    /// `(name, value)` pairs in alphabetical order.
    pub fn named(&self) -> [(&'static str, f64); 18] {
        [
            ("energy", self.energy),
            ("entropy", self.entropy),
            ("interquartile_range", self.interquartile_range),
            ("kurtosis", self.kurtosis),
            ("maximum", self.maximum),
            ("mean", self.mean),
            ("mean_absolute_deviation", self.mean_absolute_deviation),
            ("median", self.median),
            ("minimum", self.minimum),
            ("p10", self.p10),
            ("p90", self.p90),
            ("range", self.range),
            ("robust_mean_absolute_deviation", self.robust_mean_absolute_deviation),
            ("root_mean_squared", self.root_mean_squared),
            ("skewness", self.skewness),
            ("total_energy", self.total_energy),
            ("uniformity", self.uniformity),
            ("variance", self.variance),
        ]
    }
}

/// Linear-interpolation percentile on sorted data (zero-based rank `q (N - 1)`).
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Shannon entropy (bits) and uniformity of a gray-level histogram.
fn histogram_stats(bins: &[usize], n_levels: usize) -> (f64, f64) {
    let mut counts = vec![0usize; n_levels + 1];
    for &b in bins {
        counts[b] += 1;
    }
    let n = bins.len() as f64;
    let (mut entropy, mut uniformity) = (0.0, 0.0);
    for &c in counts.iter().filter(|&&c| c > 0) {
        let p = c as f64 / n;
        entropy -= p * p.log2();
        uniformity += p * p;
    }
    (entropy, uniformity)
}

/// First-order statistics over ROI intensities. Values are sorted first so
/// every statistic is independent of pixel order.
pub fn compute_first_order(
    values: &[f64],
    pixel_area: f64,
    disc: &DiscretizationConfig,
) -> Result<FirstOrderFeatures> {
    if values.is_empty() {
        return Err(Error::EmptyInput("first-order features of an empty ROI".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;

    let minimum = sorted[0];
    let maximum = sorted[sorted.len() - 1];
    let energy: f64 = sorted.iter().map(|x| x * x).sum();
    let mean = sorted.iter().sum::<f64>() / n;
    let constant = minimum == maximum;

    let (mut m2, mut m3, mut m4, mut mad) = (0.0, 0.0, 0.0, 0.0);
    for &x in &sorted {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        mad += d.abs();
    }
    let (m2, m3, m4) = if constant { (0.0, 0.0, 0.0) } else { (m2 / n, m3 / n, m4 / n) };
    let mad = if constant { 0.0 } else { mad / n };
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };

    let p10 = percentile_sorted(&sorted, 0.10);
    let p25 = percentile_sorted(&sorted, 0.25);
    let median = percentile_sorted(&sorted, 0.50);
    let p75 = percentile_sorted(&sorted, 0.75);
    let p90 = percentile_sorted(&sorted, 0.90);

    let robust: Vec<f64> = sorted.iter().copied().filter(|&x| x >= p10 && x <= p90).collect();
    let robust_mean_absolute_deviation = if robust.is_empty() || constant {
        0.0
    } else {
        let rn = robust.len() as f64;
        let rmean = robust.iter().sum::<f64>() / rn;
        robust.iter().map(|x| (x - rmean).abs()).sum::<f64>() / rn
    };

    let disc_result = discretize(&sorted, disc)?;
    let (entropy, uniformity) = histogram_stats(&disc_result.bins, disc_result.n_levels);

    Ok(FirstOrderFeatures {
        energy,
        total_energy: pixel_area * energy,
        entropy,
        minimum,
        p10,
        p90,
        maximum,
        mean,
        median,
        interquartile_range: p75 - p25,
        range: maximum - minimum,
        mean_absolute_deviation: mad,
        robust_mean_absolute_deviation,
        root_mean_squared: (energy / n).sqrt(),
        skewness,
        kurtosis,
        variance: m2,
        uniformity,
    })
}
