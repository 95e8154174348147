//! Physical-spaced 2D rasters and their on-disk formats.
//!
//! Rasters are row-major: pixel `(col, row)` lives at `row * width + col`, and
//! its center sits at `(col * spacing_x, row * spacing_y)` millimetres.

mod flatgrid;
mod nifti;
mod pgm;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use flatgrid::{read_flatgrid, save_grid, write_flatgrid, FlatPayload};
pub use nifti::{read_nifti_slice, NiftiHeader};
pub use pgm::{encode_pgm, save_pgm, window_bytes};

/// Legal BraTS label values.
pub const LEGAL_LABELS: [u8; 4] = [0, 1, 2, 4];

/// Necrotic tumor core.
pub const LABEL_NECROTIC: u8 = 1;
/// Peritumoral edema.
pub const LABEL_EDEMA: u8 = 2;
/// Enhancing tumor.
pub const LABEL_ENHANCING: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub spacing_x: f64,
    pub spacing_y: f64,
}

impl GridGeometry {
    pub fn new(width: usize, height: usize, spacing_x: f64, spacing_y: f64) -> Result<Self> {
        let geometry = Self {
            width,
            height,
            spacing_x,
            spacing_y,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    /// Unit-spaced geometry.
    pub fn unit(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidGeometry(format!(
                "zero-area grid {}x{}",
                self.width, self.height
            )));
        }
        if (self.width as u128) * (self.height as u128) > i32::MAX as u128 {
            return Err(Error::InvalidGeometry(format!(
                "grid {}x{} exceeds 2^31-1 pixels",
                self.width, self.height
            )));
        }
        for (name, s) in [("spacing_x", self.spacing_x), ("spacing_y", self.spacing_y)] {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidGeometry(format!("{name} must be finite and > 0, got {s}")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical area of one pixel in mm².
    pub fn pixel_area(&self) -> f64 {
        self.spacing_x * self.spacing_y
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    /// Physical center `(x, y)` of a pixel in mm.
    #[inline]
    pub fn center_mm(&self, col: usize, row: usize) -> (f64, f64) {
        (col as f64 * self.spacing_x, row as f64 * self.spacing_y)
    }

    /// Geometry of the grid rotated by 90°: axes and spacings swap.
    pub fn transposed(&self) -> Self {
        Self {
            width: self.height,
            height: self.width,
            spacing_x: self.spacing_y,
            spacing_y: self.spacing_x,
        }
    }

    /// Fails unless `other` describes the same raster.
    pub fn ensure_same(&self, other: &GridGeometry) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(format!(
                "{}x{} @ ({}, {}) vs {}x{} @ ({}, {})",
                self.width,
                self.height,
                self.spacing_x,
                self.spacing_y,
                other.width,
                other.height,
                other.spacing_x,
                other.spacing_y
            )))
        }
    }
}

/// Intensity raster. Every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    geometry: GridGeometry,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(geometry: GridGeometry, data: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        if data.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "payload has {} values, geometry needs {}",
                data.len(),
                geometry.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIntensity { index });
        }
        Ok(Self { geometry, data })
    }

    pub fn filled(geometry: GridGeometry, value: f64) -> Result<Self> {
        Self::new(geometry, vec![value; geometry.len()])
    }

    pub fn from_fn(geometry: GridGeometry, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(geometry.len());
        for row in 0..geometry.height {
            for col in 0..geometry.width {
                data.push(f(col, row));
            }
        }
        Self::new(geometry, data)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[self.geometry.index(col, row)]
    }

    /// Returns the grid rotated by 90° (clockwise in display orientation).
    pub fn rotated90(&self) -> Self {
        let g = self.geometry;
        let out = g.transposed();
        let data = rotate90(&self.data, g.width, g.height);
        Self { geometry: out, data }
    }

    /// Window starting at `(col0, row0)`; coordinates restart at its corner.
    pub fn crop(&self, col0: usize, row0: usize, width: usize, height: usize) -> Result<Self> {
        let g = self.geometry;
        if col0 + width > g.width || row0 + height > g.height {
            return Err(Error::InvalidGeometry("crop window exceeds the grid".into()));
        }
        let out = GridGeometry::new(width, height, g.spacing_x, g.spacing_y)?;
        let mut data = Vec::with_capacity(out.len());
        for r in row0..row0 + height {
            data.extend_from_slice(&self.data[r * g.width + col0..r * g.width + col0 + width]);
        }
        Ok(Self { geometry: out, data })
    }

    /// Adds `offset` to every intensity.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(self.geometry, self.data.iter().map(|v| v + offset).collect())
    }
}

/// BraTS label raster with values in {0, 1, 2, 4}.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrid {
    geometry: GridGeometry,
    data: Vec<u8>,
}

impl LabelGrid {
    pub fn new(geometry: GridGeometry, data: Vec<u8>) -> Result<Self> {
        geometry.validate()?;
        if data.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "payload has {} labels, geometry needs {}",
                data.len(),
                geometry.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !LEGAL_LABELS.contains(v)) {
            return Err(Error::IllegalLabel {
                value: data[index] as i64,
                index,
            });
        }
        Ok(Self { geometry, data })
    }

    pub fn background(geometry: GridGeometry) -> Result<Self> {
        Self::new(geometry, vec![0; geometry.len()])
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.data[self.geometry.index(col, row)]
    }

    pub fn rotated90(&self) -> Self {
        let g = self.geometry;
        Self {
            geometry: g.transposed(),
            data: rotate90(&self.data, g.width, g.height),
        }
    }

    pub fn count(&self, label: u8) -> usize {
        self.data.iter().filter(|&&v| v == label).count()
    }
}

/// Rotates a row-major `width x height` raster by 90°: output pixel
/// `(c', r') = (height - 1 - r, c)`.
pub(crate) fn rotate90<T: Copy>(data: &[T], width: usize, height: usize) -> Vec<T> {
    let out_w = height;
    let out_h = width;
    let mut out = Vec::with_capacity(data.len());
    for r2 in 0..out_h {
        for c2 in 0..out_w {
            let col = r2;
            let row = height - 1 - c2;
            out.push(data[row * width + col]);
        }
    }
    debug_assert_eq!(out.len(), out_w * out_h);
    out
}

/// What a file is expected to contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Image,
    Labels,
}

/// A loaded raster of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Image(ImageGrid),
    Labels(LabelGrid),
}

impl Grid {
    pub fn geometry(&self) -> &GridGeometry {
        match self {
            Grid::Image(g) => g.geometry(),
            Grid::Labels(g) => g.geometry(),
        }
    }
}

/// Loads a FLATGRID file or a NIfTI-1 file (optionally gzipped). `slice`
/// selects the axial plane of a 3D NIfTI volume and is required for them.
pub fn load_grid(path: impl AsRef<Path>, kind: GridKind, slice: Option<usize>) -> Result<Grid> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(crate::error::io_err(path))?;
    let (geometry, values) = if bytes.starts_with(flatgrid::MAGIC.as_bytes()) {
        let (geometry, payload) = read_flatgrid(&bytes, path)?;
        (geometry, payload)
    } else {
        let (geometry, values) = read_nifti_slice(&bytes, path, slice)?;
        (geometry, FlatPayload::F64(values))
    };
    match kind {
        GridKind::Image => {
            let data = match values {
                FlatPayload::F64(v) => v,
                FlatPayload::U8(v) => v.into_iter().map(f64::from).collect(),
            };
            Ok(Grid::Image(ImageGrid::new(geometry, data)?))
        }
        GridKind::Labels => {
            let data = match values {
                FlatPayload::U8(v) => v,
                FlatPayload::F64(v) => labels_from_reals(&v)?,
            };
            Ok(Grid::Labels(LabelGrid::new(geometry, data)?))
        }
    }
}

fn labels_from_reals(values: &[f64]) -> Result<Vec<u8>> {
    values
        .iter()
        .enumerate()
        .map(|(index, &v)| {
            if v.fract() == 0.0 && LEGAL_LABELS.iter().any(|&l| f64::from(l) == v) {
                Ok(v as u8)
            } else if v.is_finite() && v.fract() == 0.0 {
                Err(Error::IllegalLabel { value: v as i64, index })
            } else {
                Err(Error::IllegalLabel {
                    value: v.round() as i64,
                    index,
                })
            }
        })
        .collect()
}

pub fn load_image(path: impl AsRef<Path>, slice: Option<usize>) -> Result<ImageGrid> {
    match load_grid(path, GridKind::Image, slice)? {
        Grid::Image(g) => Ok(g),
        Grid::Labels(_) => unreachable!(),
    }
}

pub fn load_labels(path: impl AsRef<Path>, slice: Option<usize>) -> Result<LabelGrid> {
    match load_grid(path, GridKind::Labels, slice)? {
        Grid::Labels(g) => Ok(g),
        Grid::Image(_) => unreachable!(),
    }
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename, so
/// readers never observe a partially written file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    use std::sync::atomic::{AtomicU64, Ordering};
    static COUNTER: AtomicU64 = AtomicU64::new(0);

    let path = path.as_ref();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp_name = format!(
        ".{}.tmp-{}-{}",
        file_name.to_string_lossy(),
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    );
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes).map_err(crate::error::io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
    })
}
