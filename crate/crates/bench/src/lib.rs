//! Shared fixtures for the pipeline benchmarks.

use radiosynth_core::roi::mask_from_labels;
use radiosynth_core::synth::{background_fill, make_phantom, tumor_roi, FillConfig, Phantom};
use radiosynth_core::{GridGeometry, ImageGrid};

/// A 128 x 128 phantom and its tumor-free background.
pub fn phantom_with_background(seed: u64) -> (Phantom, ImageGrid) {
    let p = make_phantom(seed, GridGeometry::unit(128, 128).unwrap()).unwrap();
    let mask = mask_from_labels(&p.labels, &tumor_roi());
    let bg = background_fill(&p.image, &mask, &FillConfig::default()).unwrap().image;
    (p, bg)
}
