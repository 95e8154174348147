//! Texture features: 24 from the gray level co-occurrence matrix and 16 from
//! the gray level size zone matrix.

mod glcm;
mod glszm;

use crate::error::Result;
use crate::grid::ImageGrid;
use crate::intensity::{discretize, DiscretizationConfig};
use crate::roi::BinaryMask;

pub use glcm::{build_glcm, glcm_features, GlcmFeatures, GlcmSet, GLCM_OFFSETS};
pub use glszm::{build_glszm, build_glszm_with, glszm_features, GlszmFeatures, SizeZoneMatrix};

/// Discretized levels of the in-mask pixels: `0` outside the mask, `1..=n`
/// inside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelMap {
    pub width: usize,
    pub height: usize,
    pub levels: Vec<usize>,
    pub n_levels: usize,
}

impl LevelMap {
    pub fn new(image: &ImageGrid, mask: &BinaryMask, disc: &DiscretizationConfig) -> Result<Self> {
        image.geometry().ensure_same(mask.geometry())?;
        let idx: Vec<usize> = mask.indices().collect();
        let values: Vec<f64> = idx.iter().map(|&i| image.data()[i]).collect();
        let d = discretize(&values, disc)?;
        let g = image.geometry();
        let mut levels = vec![0usize; g.len()];
        for (&i, &b) in idx.iter().zip(&d.bins) {
            levels[i] = b;
        }
        Ok(Self {
            width: g.width,
            height: g.height,
            levels,
            n_levels: d.n_levels,
        })
    }

    #[inline]
    pub fn at(&self, col: isize, row: isize) -> usize {
        if col < 0 || row < 0 || col as usize >= self.width || row as usize >= self.height {
            0
        } else {
            self.levels[row as usize * self.width + col as usize]
        }
    }
}

/// Both texture families for one ROI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureFeatures {
    pub glcm: GlcmFeatures,
    pub glszm: GlszmFeatures,
}

pub fn compute_texture(image: &ImageGrid, mask: &BinaryMask, disc: &DiscretizationConfig) -> Result<TextureFeatures> {
    let levels = LevelMap::new(image, mask, disc)?;
    Ok(TextureFeatures {
        glcm: glcm_features(&GlcmSet::from_levels(&levels)?),
        glszm: glszm_features(&SizeZoneMatrix::from_levels(&levels, crate::roi::Connectivity::Eight)),
    })
}

/// Sums after sorting, so the result does not depend on input order.
pub(crate) fn order_free_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}
