use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LevelMap;
use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::intensity::DiscretizationConfig;
use crate::roi::{BinaryMask, Connectivity};

/// Zone counts keyed by `(gray level, zone size in pixels)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeZoneMatrix {
    pub counts: BTreeMap<(usize, usize), u64>,
    pub n_levels: usize,
    pub max_zone_size: usize,
    /// Number of ROI pixels.
    pub n_pixels: usize,
}

impl SizeZoneMatrix {
    pub fn from_levels(levels: &LevelMap, connectivity: Connectivity) -> Self {
        let (w, h) = (levels.width as isize, levels.height as isize);
        let neighbours: &[(isize, isize)] = match connectivity {
            Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => &[(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)],
        };
        let mut visited = vec![false; levels.levels.len()];
        let mut counts = BTreeMap::new();
        let mut stack = Vec::new();
        let mut n_pixels = 0;
        let mut max_zone_size = 0;
        for start in 0..levels.levels.len() {
            let level = levels.levels[start];
            if level == 0 || visited[start] {
                continue;
            }
            visited[start] = true;
            stack.push(start);
            let mut size = 0;
            while let Some(p) = stack.pop() {
                size += 1;
                let (c, r) = ((p % levels.width) as isize, (p / levels.width) as isize);
                for &(dx, dy) in neighbours {
                    let (cc, rr) = (c + dx, r + dy);
                    if cc < 0 || rr < 0 || cc >= w || rr >= h {
                        continue;
                    }
                    let q = rr as usize * levels.width + cc as usize;
                    if !visited[q] && levels.levels[q] == level {
                        visited[q] = true;
                        stack.push(q);
                    }
                }
            }
            n_pixels += size;
            max_zone_size = max_zone_size.max(size);
            *counts.entry((level, size)).or_insert(0) += 1;
        }
        Self {
            counts,
            n_levels: levels.n_levels,
            max_zone_size,
            n_pixels,
        }
    }

    pub fn zone_count(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Size-zone matrix using 8-connected zones.
pub fn build_glszm(image: &ImageGrid, mask: &BinaryMask, disc: &DiscretizationConfig) -> Result<SizeZoneMatrix> {
    build_glszm_with(image, mask, disc, Connectivity::Eight)
}

pub fn build_glszm_with(
    image: &ImageGrid,
    mask: &BinaryMask,
    disc: &DiscretizationConfig,
    connectivity: Connectivity,
) -> Result<SizeZoneMatrix> {
    if mask.is_empty() {
        return Err(Error::EmptyMask("GLSZM of an empty ROI".into()));
    }
    Ok(SizeZoneMatrix::from_levels(&LevelMap::new(image, mask, disc)?, connectivity))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlszmFeatures {
    pub gray_level_non_uniformity: f64,
    pub gray_level_non_uniformity_normalized: f64,
    pub gray_level_variance: f64,
    pub high_gray_level_zone_emphasis: f64,
    pub large_area_emphasis: f64,
    pub large_area_high_gray_level_emphasis: f64,
    pub large_area_low_gray_level_emphasis: f64,
    pub low_gray_level_zone_emphasis: f64,
    pub size_zone_non_uniformity: f64,
    pub size_zone_non_uniformity_normalized: f64,
    pub small_area_emphasis: f64,
    pub small_area_high_gray_level_emphasis: f64,
    pub small_area_low_gray_level_emphasis: f64,
    pub zone_entropy: f64,
    pub zone_percentage: f64,
    pub zone_variance: f64,
}

impl GlszmFeatures {
    pub const NAMES: [&'static str; 16] = [
        "gray_level_non_uniformity",
        "gray_level_non_uniformity_normalized",
        "gray_level_variance",
        "high_gray_level_zone_emphasis",
        "large_area_emphasis",
        "large_area_high_gray_level_emphasis",
        "large_area_low_gray_level_emphasis",
        "low_gray_level_zone_emphasis",
        "size_zone_non_uniformity",
        "size_zone_non_uniformity_normalized",
        "small_area_emphasis",
        "small_area_high_gray_level_emphasis",
        "small_area_low_gray_level_emphasis",
        "zone_entropy",
        "zone_percentage",
        "zone_variance",
    ];

    pub fn to_array(&self) -> [f64; 16] {
        [
            self.gray_level_non_uniformity,
            self.gray_level_non_uniformity_normalized,
            self.gray_level_variance,
            self.high_gray_level_zone_emphasis,
            self.large_area_emphasis,
            self.large_area_high_gray_level_emphasis,
            self.large_area_low_gray_level_emphasis,
            self.low_gray_level_zone_emphasis,
            self.size_zone_non_uniformity,
            self.size_zone_non_uniformity_normalized,
            self.small_area_emphasis,
            self.small_area_high_gray_level_emphasis,
            self.small_area_low_gray_level_emphasis,
            self.zone_entropy,
            self.zone_percentage,
            self.zone_variance,
        ]
    }

    pub fn named(&self) -> [(&'static str, f64); 16] {
        let values = self.to_array();
        std::array::from_fn(|k| (Self::NAMES[k], values[k]))
    }
}

pub fn glszm_features(szm: &SizeZoneMatrix) -> GlszmFeatures {
    let nz = szm.zone_count() as f64;
    let mut by_level: BTreeMap<usize, f64> = BTreeMap::new();
    let mut by_size: BTreeMap<usize, f64> = BTreeMap::new();
    let (mut sae, mut lae, mut lglze, mut hglze) = (0.0, 0.0, 0.0, 0.0);
    let (mut salgle, mut sahgle, mut lalgle, mut lahgle) = (0.0, 0.0, 0.0, 0.0);
    let (mut mu_i, mut mu_j, mut entropy) = (0.0, 0.0, 0.0);
    for (&(level, size), &count) in &szm.counts {
        let c = count as f64;
        let p = c / nz;
        let (i2, j2) = ((level * level) as f64, (size * size) as f64);
        *by_level.entry(level).or_insert(0.0) += c;
        *by_size.entry(size).or_insert(0.0) += c;
        sae += p / j2;
        lae += p * j2;
        lglze += p / i2;
        hglze += p * i2;
        salgle += p / (i2 * j2);
        sahgle += p * i2 / j2;
        lalgle += p * j2 / i2;
        lahgle += p * i2 * j2;
        mu_i += p * level as f64;
        mu_j += p * size as f64;
        entropy -= p * p.log2();
    }
    let (mut glv, mut zv) = (0.0, 0.0);
    for (&(level, size), &count) in &szm.counts {
        let p = count as f64 / nz;
        glv += p * (level as f64 - mu_i).powi(2);
        zv += p * (size as f64 - mu_j).powi(2);
    }
    let gln: f64 = by_level.values().map(|s| s * s).sum();
    let szn: f64 = by_size.values().map(|s| s * s).sum();
    GlszmFeatures {
        gray_level_non_uniformity: gln / nz,
        gray_level_non_uniformity_normalized: gln / (nz * nz),
        gray_level_variance: glv,
        high_gray_level_zone_emphasis: hglze,
        large_area_emphasis: lae,
        large_area_high_gray_level_emphasis: lahgle,
        large_area_low_gray_level_emphasis: lalgle,
        low_gray_level_zone_emphasis: lglze,
        size_zone_non_uniformity: szn / nz,
        size_zone_non_uniformity_normalized: szn / (nz * nz),
        small_area_emphasis: sae,
        small_area_high_gray_level_emphasis: sahgle,
        small_area_low_gray_level_emphasis: salgle,
        zone_entropy: entropy,
        zone_percentage: nz / szm.n_pixels as f64,
        zone_variance: zv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;

    const W1: DiscretizationConfig = DiscretizationConfig::FixedBinWidth { bin_width: 1.0 };

    fn full(w: usize, h: usize, values: Vec<f64>) -> (ImageGrid, BinaryMask) {
        let g = GridGeometry::unit(w, h).unwrap();
        (ImageGrid::new(g, values).unwrap(), BinaryMask::new(g, vec![true; w * h]).unwrap())
    }

    #[test]
    fn constant_block_is_one_zone() {
        let (img, m) = full(3, 3, vec![2.0; 9]);
        let szm = build_glszm(&img, &m, &W1).unwrap();
        assert_eq!(szm.counts, BTreeMap::from([((1, 9), 1)]));
        let f = glszm_features(&szm);
        assert_eq!(f.zone_percentage, 1.0 / 9.0);
        assert_eq!(f.zone_entropy, 0.0);
        assert_eq!(f.size_zone_non_uniformity_normalized, 1.0);
    }

    #[test]
    fn hand_enumerated_zones() {
        // levels: 1 1 1 | 2 2 | (gap) 1
        let g = GridGeometry::unit(7, 1).unwrap();
        let img = ImageGrid::new(g, vec![1.0, 1.0, 1.0, 2.0, 2.0, 0.0, 1.0]).unwrap();
        let m = BinaryMask::new(g, vec![true, true, true, true, true, false, true]).unwrap();
        let szm = build_glszm(&img, &m, &W1).unwrap();
        assert_eq!(szm.counts, BTreeMap::from([((1, 1), 1), ((1, 3), 1), ((2, 2), 1)]));
    }

    #[test]
    fn every_pixel_its_own_zone() {
        // 2x2 tiling of four distinct levels: no 8-neighbour shares a level.
        let (img, m) = full(6, 6, (0..36).map(|i| (((i / 6) % 2) * 2 + (i % 6) % 2) as f64).collect());
        let f = glszm_features(&build_glszm(&img, &m, &W1).unwrap());
        assert_eq!(f.zone_percentage, 1.0);
        assert_eq!(f.small_area_emphasis, 1.0);
    }

    #[test]
    fn checkerboard_joins_diagonally() {
        let (img, m) = full(4, 4, (0..16).map(|i| ((i % 4 + i / 4) % 2) as f64).collect());
        let eight = build_glszm(&img, &m, &W1).unwrap();
        assert_eq!(eight.zone_count(), 2);
        let four = build_glszm_with(&img, &m, &W1, Connectivity::Four).unwrap();
        assert_eq!(four.zone_count(), 16);
    }
}
