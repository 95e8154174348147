//! Radiomics feature extraction and feature-conditioned tumor synthesis for
//! 2D MR slices.
//!
//! * [`grid`]: physical-spaced rasters, FLATGRID / NIfTI-1 / PGM I/O
//! * [`roi`]: label-set masks, components, circular masks, boundary meshes
//! * [`shape`], [`intensity`], [`texture`]: the 9 + 18 + 40 features per ROI
//! * [`features`]: per-subject vectors, cohorts, the features CSV format
//! * [`synth`]: harmonic tumor removal, blob rendering, inverse synthesis
//! * [`evalstat`]: cosine / Pearson / Spearman cohort similarity

pub mod error;
pub mod evalstat;
pub mod features;
pub mod grid;
pub mod intensity;
pub mod roi;
pub mod shape;
pub mod synth;
pub mod texture;

pub use error::{Error, Result};
pub use features::{
    extract_features, CohortMatrix, ColumnKey, Family, FeatureEntry, FeatureVector, MissingPolicy,
};
pub use grid::{GridGeometry, ImageGrid, LabelGrid};
pub use intensity::DiscretizationConfig;
pub use roi::{BinaryMask, RoiSpec};
