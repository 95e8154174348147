use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{order_free_mean, LevelMap};
use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::intensity::DiscretizationConfig;
use crate::roi::BinaryMask;

/// `(row, col)` offsets: 0°, 45°, 90° and 135°.
pub const GLCM_OFFSETS: [(isize, isize); 4] = [(0, 1), (1, 1), (1, 0), (1, -1)];

/// One symmetric, normalized co-occurrence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleMatrix {
    pub offset: (isize, isize),
    /// Row-major `n_levels x n_levels`; entry `(i - 1, j - 1)` holds `p(i, j)`.
    pub p: Vec<f64>,
}

/// Co-occurrence matrices for every offset that has at least one in-mask pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GlcmSet {
    pub n_levels: usize,
    pub angles: Vec<AngleMatrix>,
}

impl GlcmSet {
    pub fn from_levels(levels: &LevelMap) -> Result<Self> {
        let ng = levels.n_levels;
        let mut angles = Vec::with_capacity(GLCM_OFFSETS.len());
        for &(dr, dc) in &GLCM_OFFSETS {
            let mut counts = vec![0u64; ng * ng];
            let mut total = 0u64;
            for row in 0..levels.height as isize {
                for col in 0..levels.width as isize {
                    let a = levels.at(col, row);
                    if a == 0 {
                        continue;
                    }
                    let b = levels.at(col + dc, row + dr);
                    if b == 0 {
                        continue;
                    }
                    counts[(a - 1) * ng + (b - 1)] += 1;
                    counts[(b - 1) * ng + (a - 1)] += 1;
                    total += 2;
                }
            }
            if total == 0 {
                continue;
            }
            let t = total as f64;
            angles.push(AngleMatrix {
                offset: (dr, dc),
                p: counts.iter().map(|&c| c as f64 / t).collect(),
            });
        }
        if angles.is_empty() {
            return Err(Error::NoGlcmPairs);
        }
        Ok(Self { n_levels: ng, angles })
    }
}

pub fn build_glcm(image: &ImageGrid, mask: &BinaryMask, disc: &DiscretizationConfig) -> Result<GlcmSet> {
    if mask.is_empty() {
        return Err(Error::EmptyMask("GLCM of an empty ROI".into()));
    }
    GlcmSet::from_levels(&LevelMap::new(image, mask, disc)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlcmFeatures {
    pub autocorrelation: f64,
    pub cluster_prominence: f64,
    pub cluster_shade: f64,
    pub cluster_tendency: f64,
    pub contrast: f64,
    pub correlation: f64,
    pub difference_average: f64,
    pub difference_entropy: f64,
    pub difference_variance: f64,
    pub id: f64,
    pub idm: f64,
    pub idmn: f64,
    pub idn: f64,
    pub imc1: f64,
    pub imc2: f64,
    pub inverse_variance: f64,
    pub joint_average: f64,
    pub joint_energy: f64,
    pub joint_entropy: f64,
    pub maximum_probability: f64,
    pub mcc: f64,
    pub sum_average: f64,
    pub sum_entropy: f64,
    pub sum_squares: f64,
}

impl GlcmFeatures {
    pub const NAMES: [&'static str; 24] = [
        "autocorrelation",
        "cluster_prominence",
        "cluster_shade",
        "cluster_tendency",
        "contrast",
        "correlation",
        "difference_average",
        "difference_entropy",
        "difference_variance",
        "id",
        "idm",
        "idmn",
        "idn",
        "imc1",
        "imc2",
        "inverse_variance",
        "joint_average",
        "joint_energy",
        "joint_entropy",
        "maximum_probability",
        "mcc",
        "sum_average",
        "sum_entropy",
        "sum_squares",
    ];

    pub fn to_array(&self) -> [f64; 24] {
        [
            self.autocorrelation,
            self.cluster_prominence,
            self.cluster_shade,
            self.cluster_tendency,
            self.contrast,
            self.correlation,
            self.difference_average,
            self.difference_entropy,
            self.difference_variance,
            self.id,
            self.idm,
            self.idmn,
            self.idn,
            self.imc1,
            self.imc2,
            self.inverse_variance,
            self.joint_average,
            self.joint_energy,
            self.joint_entropy,
            self.maximum_probability,
            self.mcc,
            self.sum_average,
            self.sum_entropy,
            self.sum_squares,
        ]
    }

    pub fn from_array(a: [f64; 24]) -> Self {
        Self {
            autocorrelation: a[0],
            cluster_prominence: a[1],
            cluster_shade: a[2],
            cluster_tendency: a[3],
            contrast: a[4],
            correlation: a[5],
            difference_average: a[6],
            difference_entropy: a[7],
            difference_variance: a[8],
            id: a[9],
            idm: a[10],
            idmn: a[11],
            idn: a[12],
            imc1: a[13],
            imc2: a[14],
            inverse_variance: a[15],
            joint_average: a[16],
            joint_energy: a[17],
            joint_entropy: a[18],
            maximum_probability: a[19],
            mcc: a[20],
            sum_average: a[21],
            sum_entropy: a[22],
            sum_squares: a[23],
        }
    }

    pub fn named(&self) -> [(&'static str, f64); 24] {
        let values = self.to_array();
        std::array::from_fn(|k| (Self::NAMES[k], values[k]))
    }
}

fn plogp_sum(p: impl Iterator<Item = f64>) -> f64 {
    -p.filter(|&v| v > 0.0).map(|v| v * v.log2()).sum::<f64>()
}

/// Second-largest eigenvalue of `Q(i, j) = sum_k p(i,k) p(j,k) / (px(i) px(k))`,
/// square-rooted. For symmetric `P` this equals the second-largest
/// `|eigenvalue|` of `D^-1/2 P D^-1/2`, restricted to occupied levels.
fn mcc(p: &[f64], px: &[f64], ng: usize) -> f64 {
    let occupied: Vec<usize> = (0..ng).filter(|&i| px[i] > 0.0).collect();
    let m = occupied.len();
    if m < 2 {
        return 1.0;
    }
    let s = DMatrix::from_fn(m, m, |a, b| {
        let (i, j) = (occupied[a], occupied[b]);
        p[i * ng + j] / (px[i] * px[j]).sqrt()
    });
    let mut mags: Vec<f64> = s.symmetric_eigenvalues().iter().map(|l| l.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags[1].min(1.0)
}

fn angle_features(p: &[f64], ng: usize) -> [f64; 24] {
    let level = |k: usize| (k + 1) as f64;
    let mut px = vec![0.0; ng];
    for i in 0..ng {
        px[i] = p[i * ng..(i + 1) * ng].iter().sum();
    }
    // Symmetric matrix: both marginals and means coincide.
    let mu: f64 = (0..ng).map(|i| level(i) * px[i]).sum();
    let sigma2: f64 = (0..ng).map(|i| (level(i) - mu).powi(2) * px[i]).sum();

    let mut p_sum = vec![0.0; 2 * ng + 1];
    let mut p_diff = vec![0.0; ng];
    let (mut autocorrelation, mut prominence, mut shade, mut tendency, mut contrast) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut id, mut idm, mut idmn, mut idn) = (0.0, 0.0, 0.0, 0.0);
    let (mut joint_energy, mut max_p, mut hxy1) = (0.0, 0.0f64, 0.0);
    let ngf = ng as f64;
    for a in 0..ng {
        for b in 0..ng {
            let v = p[a * ng + b];
            if v == 0.0 {
                continue;
            }
            let (i, j) = (level(a), level(b));
            let d = (i - j).abs();
            let c = i + j - 2.0 * mu;
            p_sum[a + b + 2] += v;
            p_diff[a.abs_diff(b)] += v;
            autocorrelation += v * i * j;
            prominence += v * c.powi(4);
            shade += v * c.powi(3);
            tendency += v * c * c;
            contrast += v * d * d;
            id += v / (1.0 + d);
            idm += v / (1.0 + d * d);
            idmn += v / (1.0 + d * d / (ngf * ngf));
            idn += v / (1.0 + d / ngf);
            joint_energy += v * v;
            max_p = max_p.max(v);
            hxy1 -= v * (px[a] * px[b]).log2();
        }
    }
    let hxy = plogp_sum(p.iter().copied());
    let hx = plogp_sum(px.iter().copied());
    let mut hxy2 = 0.0;
    for a in 0..ng {
        for b in 0..ng {
            let q = px[a] * px[b];
            if q > 0.0 {
                hxy2 -= q * q.log2();
            }
        }
    }

    let difference_average: f64 = p_diff.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    let difference_variance: f64 = p_diff
        .iter()
        .enumerate()
        .map(|(k, v)| (k as f64 - difference_average).powi(2) * v)
        .sum();
    let inverse_variance: f64 = p_diff.iter().enumerate().skip(1).map(|(k, v)| v / (k * k) as f64).sum();
    let sum_average: f64 = p_sum.iter().enumerate().map(|(k, v)| k as f64 * v).sum();

    let degenerate = sigma2 <= 0.0 || hx <= 0.0;
    let correlation = if degenerate {
        1.0
    } else {
        ((autocorrelation - mu * mu) / sigma2).clamp(-1.0, 1.0)
    };
    let imc1 = if degenerate { 0.0 } else { (hxy - hxy1) / hx };
    let imc2 = if degenerate {
        0.0
    } else {
        (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt()
    };
    let mcc = if degenerate { 1.0 } else { mcc(p, &px, ng) };

    [
        autocorrelation,
        prominence,
        shade,
        tendency,
        contrast,
        correlation,
        difference_average,
        plogp_sum(p_diff.iter().copied()),
        difference_variance,
        id,
        idm,
        idmn,
        idn,
        imc1,
        imc2,
        inverse_variance,
        mu,
        joint_energy,
        hxy,
        max_p,
        mcc,
        sum_average,
        plogp_sum(p_sum.iter().copied()),
        sigma2,
    ]
}

/// Per-angle features averaged over the retained angles.
pub fn glcm_features(glcm: &GlcmSet) -> GlcmFeatures {
    let per_angle: Vec<[f64; 24]> = glcm
        .angles
        .iter()
        .map(|a| angle_features(&a.p, glcm.n_levels))
        .collect();
    let mut out = [0.0; 24];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut column: Vec<f64> = per_angle.iter().map(|f| f[k]).collect();
        *slot = order_free_mean(&mut column);
    }
    GlcmFeatures::from_array(out)
}
