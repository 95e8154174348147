//! GLCM by explicit pair enumeration and GLSZM by union-find.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;

use crate::{levels_fixed_width, Named};

/// Row-major level raster; `None` outside the ROI.
pub struct LevelRaster {
    pub width: usize,
    pub height: usize,
    pub levels: Vec<Option<usize>>,
    pub n_levels: usize,
}

impl LevelRaster {
    pub fn from_roi(width: usize, height: usize, values: &[f64], mask: &[bool], bin_width: f64) -> Self {
        let inside: Vec<f64> = (0..values.len()).filter(|&i| mask[i]).map(|i| values[i]).collect();
        let lv = levels_fixed_width(&inside, bin_width);
        let mut it = lv.iter();
        let levels: Vec<Option<usize>> = (0..values.len())
            .map(|i| if mask[i] { it.next().copied() } else { None })
            .collect();
        let n_levels = lv.iter().copied().max().unwrap_or(1);
        Self {
            width,
            height,
            levels,
            n_levels,
        }
    }

    fn at(&self, r: i64, c: i64) -> Option<usize> {
        if r < 0 || c < 0 || r >= self.height as i64 || c >= self.width as i64 {
            return None;
        }
        self.levels[r as usize * self.width + c as usize]
    }
}

/// Symmetric, normalized co-occurrence probabilities for one (row, col)
/// offset, or `None` when no pair exists.
pub fn glcm_matrix(raster: &LevelRaster, dr: i64, dc: i64) -> Option<HashMap<(usize, usize), f64>> {
    let mut counts: HashMap<(usize, usize), f64> = HashMap::new();
    for r in 0..raster.height as i64 {
        for c in 0..raster.width as i64 {
            if let (Some(a), Some(b)) = (raster.at(r, c), raster.at(r + dr, c + dc)) {
                *counts.entry((a, b)).or_default() += 1.0;
                *counts.entry((b, a)).or_default() += 1.0;
            }
        }
    }
    let total: f64 = counts.values().sum();
    if total == 0.0 {
        return None;
    }
    Some(counts.into_iter().map(|(k, v)| (k, v / total)).collect())
}

fn entropy_of<K>(m: &HashMap<K, f64>) -> f64 {
    -m.values().filter(|&&p| p > 0.0).map(|p| p * p.log2()).sum::<f64>()
}

fn glcm_angle(p: &HashMap<(usize, usize), f64>, ng: usize) -> Named {
    let mut px: HashMap<usize, f64> = HashMap::new();
    let mut py: HashMap<usize, f64> = HashMap::new();
    for (&(i, j), &v) in p {
        *px.entry(i).or_default() += v;
        *py.entry(j).or_default() += v;
    }
    let sum = |f: &dyn Fn(f64, f64) -> f64| p.iter().map(|(&(i, j), &v)| v * f(i as f64, j as f64)).sum::<f64>();
    let mux = sum(&|i, _| i);
    let muy = sum(&|_, j| j);
    let sx = sum(&|i, _| (i - mux).powi(2)).sqrt();
    let sy = sum(&|_, j| (j - muy).powi(2)).sqrt();
    let ngf = ng as f64;

    let mut diff: HashMap<usize, f64> = HashMap::new();
    let mut tot: HashMap<usize, f64> = HashMap::new();
    for (&(i, j), &v) in p {
        *diff.entry(i.abs_diff(j)).or_default() += v;
        *tot.entry(i + j).or_default() += v;
    }
    let da: f64 = diff.iter().map(|(&k, &v)| k as f64 * v).sum();

    let hxy = entropy_of(p);
    let hx = entropy_of(&px);
    let hy = entropy_of(&py);
    let hxy1 = -p.iter().map(|(&(i, j), &v)| v * (px[&i] * py[&j]).log2()).sum::<f64>();
    let mut hxy2 = 0.0;
    for &a in px.values() {
        for &b in py.values() {
            hxy2 -= a * b * (a * b).log2();
        }
    }
    let degenerate = sx == 0.0 || sy == 0.0;

    let mut f = Named::new();
    f.insert("autocorrelation", sum(&|i, j| i * j));
    f.insert("joint_average", mux);
    f.insert("cluster_prominence", sum(&|i, j| (i + j - mux - muy).powi(4)));
    f.insert("cluster_shade", sum(&|i, j| (i + j - mux - muy).powi(3)));
    f.insert("cluster_tendency", sum(&|i, j| (i + j - mux - muy).powi(2)));
    f.insert("contrast", sum(&|i, j| (i - j).powi(2)));
    f.insert(
        "correlation",
        if degenerate { 1.0 } else { (sum(&|i, j| i * j) - mux * muy) / (sx * sy) },
    );
    f.insert("difference_average", da);
    f.insert("difference_entropy", entropy_of(&diff));
    f.insert(
        "difference_variance",
        diff.iter().map(|(&k, &v)| (k as f64 - da).powi(2) * v).sum(),
    );
    f.insert("joint_energy", p.values().map(|v| v * v).sum());
    f.insert("joint_entropy", hxy);
    f.insert("imc1", if degenerate { 0.0 } else { (hxy - hxy1) / hx.max(hy) });
    f.insert(
        "imc2",
        if degenerate { 0.0 } else { (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt() },
    );
    f.insert("idm", sum(&|i, j| 1.0 / (1.0 + (i - j).powi(2))));
    f.insert("idmn", sum(&|i, j| 1.0 / (1.0 + (i - j).powi(2) / (ngf * ngf))));
    f.insert("id", sum(&|i, j| 1.0 / (1.0 + (i - j).abs())));
    f.insert("idn", sum(&|i, j| 1.0 / (1.0 + (i - j).abs() / ngf)));
    f.insert(
        "inverse_variance",
        p.iter()
            .filter(|(&(i, j), _)| i != j)
            .map(|(&(i, j), &v)| v / (i as f64 - j as f64).powi(2))
            .sum(),
    );
    f.insert("maximum_probability", p.values().cloned().fold(0.0, f64::max));
    f.insert("sum_average", sum(&|i, j| i + j));
    f.insert("sum_entropy", entropy_of(&tot));
    f.insert("sum_squares", sum(&|i, _| (i - mux).powi(2)));
    f.insert("mcc", if degenerate { 1.0 } else { mcc(p, &px, &py) });
    f
}

/// Square root of the second-largest eigenvalue of
/// `Q(i,j) = sum_k p(i,k) p(j,k) / (px(i) py(k))`.
///
/// `Q` is built by its defining triple sum. Unsymmetric QR iteration does not
/// converge reliably on these matrices, so the spectrum is read from the
/// similar matrix `D^1/2 Q D^-1/2` (`D = diag(px)`), which is symmetric
/// because `p` is.
fn mcc(p: &HashMap<(usize, usize), f64>, px: &HashMap<usize, f64>, py: &HashMap<usize, f64>) -> f64 {
    let mut levels: Vec<usize> = px.keys().copied().collect();
    levels.sort();
    let n = levels.len();
    if n < 2 {
        return 1.0;
    }
    let get = |i: usize, j: usize| p.get(&(i, j)).copied().unwrap_or(0.0);
    let q = DMatrix::from_fn(n, n, |a, b| {
        let (i, j) = (levels[a], levels[b]);
        py.iter()
            .map(|(&k, &pk)| get(i, k) * get(j, k) / (px[&i] * pk))
            .sum::<f64>()
    });
    let c = DMatrix::from_fn(n, n, |a, b| q[(a, b)] * (px[&levels[a]] / px[&levels[b]]).sqrt());
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev[1].max(0.0).sqrt().min(1.0)
}

/// The 24 GLCM features averaged over the four 2D offsets that have pairs.
pub fn glcm_features(raster: &LevelRaster) -> Option<Named> {
    let per: Vec<Named> = [(0, 1), (1, 1), (1, 0), (1, -1)]
        .iter()
        .filter_map(|&(dr, dc)| glcm_matrix(raster, dr, dc))
        .map(|p| glcm_angle(&p, raster.n_levels))
        .collect();
    if per.is_empty() {
        return None;
    }
    let mut out = Named::new();
    for name in per[0].keys() {
        out.insert(name, per.iter().map(|f| f[name]).sum::<f64>() / per.len() as f64);
    }
    Some(out)
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Zone counts `(level, size) -> number of zones`, 8-connected.
pub fn size_zones(raster: &LevelRaster) -> BTreeMap<(usize, usize), usize> {
    let n = raster.levels.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for r in 0..raster.height as i64 {
        for c in 0..raster.width as i64 {
            let Some(l) = raster.at(r, c) else { continue };
            for (dr, dc) in [(0, 1), (1, -1), (1, 0), (1, 1)] {
                if raster.at(r + dr, c + dc) == Some(l) {
                    let a = find(&mut parent, r as usize * raster.width + c as usize);
                    let b = find(&mut parent, (r + dr) as usize * raster.width + (c + dc) as usize);
                    parent[a] = b;
                }
            }
        }
    }
    let mut zones: HashMap<usize, (usize, usize)> = HashMap::new();
    for i in 0..n {
        if let Some(l) = raster.levels[i] {
            let root = find(&mut parent, i);
            zones.entry(root).or_insert((l, 0)).1 += 1;
        }
    }
    let mut out = BTreeMap::new();
    for (_, key) in zones {
        *out.entry(key).or_default() += 1;
    }
    out
}

/// The 16 GLSZM features.
pub fn glszm_features(raster: &LevelRaster) -> Named {
    let zones = size_zones(raster);
    let np = raster.levels.iter().filter(|l| l.is_some()).count() as f64;
    let nz: f64 = zones.values().map(|&c| c as f64).sum();
    let p = |c: usize| c as f64 / nz;
    let sum = |f: &dyn Fn(f64, f64) -> f64| {
        zones
            .iter()
            .map(|(&(i, j), &c)| p(c) * f(i as f64, j as f64))
            .sum::<f64>()
    };
    let mu_i = sum(&|i, _| i);
    let mu_j = sum(&|_, j| j);
    let mut by_i: BTreeMap<usize, f64> = BTreeMap::new();
    let mut by_j: BTreeMap<usize, f64> = BTreeMap::new();
    for (&(i, j), &c) in &zones {
        *by_i.entry(i).or_default() += c as f64;
        *by_j.entry(j).or_default() += c as f64;
    }
    let gln: f64 = by_i.values().map(|s| s * s).sum();
    let szn: f64 = by_j.values().map(|s| s * s).sum();

    let mut f = Named::new();
    f.insert("small_area_emphasis", sum(&|_, j| 1.0 / (j * j)));
    f.insert("large_area_emphasis", sum(&|_, j| j * j));
    f.insert("gray_level_non_uniformity", gln / nz);
    f.insert("gray_level_non_uniformity_normalized", gln / (nz * nz));
    f.insert("size_zone_non_uniformity", szn / nz);
    f.insert("size_zone_non_uniformity_normalized", szn / (nz * nz));
    f.insert("zone_percentage", nz / np);
    f.insert("gray_level_variance", sum(&|i, _| (i - mu_i).powi(2)));
    f.insert("zone_variance", sum(&|_, j| (j - mu_j).powi(2)));
    f.insert(
        "zone_entropy",
        -zones.values().map(|&c| p(c) * p(c).log2()).sum::<f64>(),
    );
    f.insert("low_gray_level_zone_emphasis", sum(&|i, _| 1.0 / (i * i)));
    f.insert("high_gray_level_zone_emphasis", sum(&|i, _| i * i));
    f.insert("small_area_low_gray_level_emphasis", sum(&|i, j| 1.0 / (i * i * j * j)));
    f.insert("small_area_high_gray_level_emphasis", sum(&|i, j| i * i / (j * j)));
    f.insert("large_area_low_gray_level_emphasis", sum(&|i, j| j * j / (i * i)));
    f.insert("large_area_high_gray_level_emphasis", sum(&|i, j| i * i * j * j));
    f
}
