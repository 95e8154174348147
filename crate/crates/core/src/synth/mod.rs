//! Tumor removal, parametric tumor rendering and feature-conditioned
//! synthesis.

mod anneal;
mod blob;
mod fill;
mod phantom;

pub use anneal::{
    synthesize, target_report, FeatureTarget, SynthConfig, SynthesisResult, TargetProfile, TargetSpec, TracePoint,
};
pub use blob::{render_blob, BlobParams, BlobRenderer, CORE_RATIO_RANGE, FOURIER_MODES, PARAM_COUNT};
pub use fill::{background_fill, FillConfig, FillOutcome};
pub use phantom::{make_phantom, Phantom, MIN_PHANTOM_SIZE};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, ImageGrid, LabelGrid};
use crate::roi::{boundary_mesh, circular_mask, mask_from_labels, maximum_diameter, BinaryMask, RoiSpec};

/// Default ratio of conditioning-circle diameter to tumor maximum diameter.
pub const DEFAULT_MASK_SCALE: f64 = 1.25;
/// Default diameter range (mm) of random removal masks.
pub const RANDOM_MASK_DIAMETER: (f64, f64) = (10.0, 60.0);

/// Every tumor label: necrotic, edema and enhancing.
pub fn tumor_roi() -> RoiSpec {
    RoiSpec::whole_tumor()
}

/// Centroid (mm) and `scale` times the maximum diameter of the `roi` mask.
pub fn conditioning_circle(labels: &LabelGrid, roi: &RoiSpec, scale: f64) -> Result<((f64, f64), f64)> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("mask scale must be > 0, got {scale}")));
    }
    let mask = mask_from_labels(labels, roi);
    if mask.is_empty() {
        return Err(Error::EmptyMask(format!("ROI '{}' has no pixels", roi.name)));
    }
    let g = labels.geometry();
    let n = mask.pixel_count() as f64;
    let (sx, sy) = mask.indices().fold((0.0, 0.0), |(sx, sy), i| {
        let (c, r) = g.coords(i);
        let (x, y) = g.center_mm(c, r);
        (sx + x, sy + y)
    });
    let diameter = maximum_diameter(&boundary_mesh(&mask)?);
    Ok(((sx / n, sy / n), scale * diameter))
}

/// Circle of uniformly drawn diameter in `range` (mm), placed uniformly so it
/// lies inside the grid.
pub fn random_circular_mask(geometry: &GridGeometry, seed: u64, range: (f64, f64)) -> Result<BinaryMask> {
    if !(range.0 > 0.0 && range.0 <= range.1) {
        return Err(Error::InvalidArgument("diameter range must satisfy 0 < lo <= hi".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    };
    let (fx, fy) = (
        (geometry.width - 1) as f64 * geometry.spacing_x,
        (geometry.height - 1) as f64 * geometry.spacing_y,
    );
    let r = d / 2.0;
    let pick = |rng: &mut ChaCha8Rng, extent: f64| {
        if extent > 2.0 * r {
            rng.random_range(r..extent - r)
        } else {
            extent / 2.0
        }
    };
    let center = (pick(&mut rng, fx), pick(&mut rng, fy));
    circular_mask(geometry, center, d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replacement {
    pub image: ImageGrid,
    pub labels: LabelGrid,
    pub fill: FillOutcome,
    pub synthesis: Option<SynthesisResult>,
    pub pipeline: Vec<String>,
}

/// Removes the existing tumor by harmonic fill, then, when a target is
/// given, synthesizes a new one at `new_center`.
pub fn replace_tumor(
    image: &ImageGrid,
    labels: &LabelGrid,
    new_center: (f64, f64),
    target: Option<&TargetSpec>,
    fill: &FillConfig,
    synth: &SynthConfig,
) -> Result<Replacement> {
    let g = image.geometry();
    g.ensure_same(labels.geometry())?;
    let (x_hi, y_hi) = (
        (g.width as f64 - 0.5) * g.spacing_x,
        (g.height as f64 - 0.5) * g.spacing_y,
    );
    let (x, y) = new_center;
    if !(x >= -0.5 * g.spacing_x && x <= x_hi && y >= -0.5 * g.spacing_y && y <= y_hi) {
        return Err(Error::InvalidArgument(format!("new center ({x}, {y}) lies outside the grid")));
    }
    let mask = mask_from_labels(labels, &tumor_roi());
    if mask.is_empty() {
        return Err(Error::EmptyMask("labels contain no tumor".into()));
    }
    let filled = background_fill(image, &mask, fill)?;
    let mut pipeline = vec!["background_fill".to_string()];
    match target {
        None => Ok(Replacement {
            image: filled.image.clone(),
            labels: LabelGrid::background(*g)?,
            fill: filled,
            synthesis: None,
            pipeline,
        }),
        Some(t) => {
            let mut res = synthesize(&filled.image, new_center, t, synth)?;
            pipeline.push("synthesize".into());
            res.pipeline = pipeline.clone();
            res.achieved.metadata.source = pipeline.join("+");
            Ok(Replacement {
                image: res.image.clone(),
                labels: res.labels.clone(),
                fill: filled,
                synthesis: Some(res),
                pipeline,
            })
        }
    }
}
