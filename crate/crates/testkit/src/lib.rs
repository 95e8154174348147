//! Brute-force reference implementations used by the test suites.
//!
//! Nothing here calls into the engine. Every routine works on plain vectors
//! and follows the textbook definition as literally as possible; speed is
//! irrelevant.

pub mod fixtures;
pub mod stats;
pub mod texture;

use std::collections::BTreeMap;

pub type Named = BTreeMap<&'static str, f64>;

/// `|a - b| <= rel * max(|a|, |b|) + abs`.
pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

/// Fixed-bin-width gray levels, 1-based, anchored at the minimum.
pub fn levels_fixed_width(values: &[f64], bin_width: f64) -> Vec<usize> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return vec![1; values.len()];
    }
    values.iter().map(|x| ((x - min) / bin_width).floor() as usize + 1).collect()
}

/// Percentile by linear interpolation between closest ranks, rank `q (N-1)`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = q * (s.len() as f64 - 1.0);
    let lo = h.floor() as usize;
    if lo + 1 >= s.len() {
        return s[s.len() - 1];
    }
    s[lo] + (h - lo as f64) * (s[lo + 1] - s[lo])
}

/// The 18 first-order features by direct formula.
pub fn first_order(values: &[f64], pixel_area: f64, bin_width: f64) -> Named {
    let n = values.len() as f64;
    let mut f = Named::new();
    let energy: f64 = values.iter().map(|x| x * x).sum();
    let mean = values.iter().sum::<f64>() / n;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let moment = |k: i32| values.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / n;
    let (m2, m3, m4) = if min == max { (0.0, 0.0, 0.0) } else { (moment(2), moment(3), moment(4)) };

    let levels = levels_fixed_width(values, bin_width);
    let mut hist: BTreeMap<usize, f64> = BTreeMap::new();
    for l in levels {
        *hist.entry(l).or_default() += 1.0;
    }
    let entropy = -hist.values().map(|c| (c / n) * (c / n).log2()).sum::<f64>();
    let uniformity = hist.values().map(|c| (c / n).powi(2)).sum::<f64>();

    let p10 = percentile(values, 0.1);
    let p90 = percentile(values, 0.9);
    let robust: Vec<f64> = values.iter().cloned().filter(|&x| x >= p10 && x <= p90).collect();
    let rmean = robust.iter().sum::<f64>() / robust.len() as f64;
    let rmad = if min == max {
        0.0
    } else {
        robust.iter().map(|x| (x - rmean).abs()).sum::<f64>() / robust.len() as f64
    };
    let mad = if min == max {
        0.0
    } else {
        values.iter().map(|x| (x - mean).abs()).sum::<f64>() / n
    };

    f.insert("energy", energy);
    f.insert("total_energy", energy * pixel_area);
    f.insert("entropy", entropy);
    f.insert("uniformity", uniformity);
    f.insert("minimum", min);
    f.insert("maximum", max);
    f.insert("range", max - min);
    f.insert("mean", mean);
    f.insert("median", percentile(values, 0.5));
    f.insert("p10", p10);
    f.insert("p90", p90);
    f.insert("interquartile_range", percentile(values, 0.75) - percentile(values, 0.25));
    f.insert("mean_absolute_deviation", mad);
    f.insert("robust_mean_absolute_deviation", rmad);
    f.insert("root_mean_squared", (energy / n).sqrt());
    f.insert("variance", m2);
    f.insert("skewness", if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 });
    f.insert("kurtosis", if m2 > 0.0 { m4 / (m2 * m2) } else { 0.0 });
    f
}
