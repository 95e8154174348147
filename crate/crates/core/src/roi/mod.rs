//! ROI selection: label-set masks, connected components, the circular
//! conditioning mask, and the boundary mesh used by the shape features.

mod mesh;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{rotate90, GridGeometry, LabelGrid, LABEL_EDEMA, LABEL_ENHANCING, LABEL_NECROTIC};

pub use mesh::{boundary_mesh, maximum_diameter, BoundaryMesh};

/// A named set of tumor labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiSpec {
    pub name: String,
    pub labels: BTreeSet<u8>,
    /// Labels whose union supplies the shape features, when they differ from
    /// `labels` (ROI2 takes its shape from necrotic plus enhancing).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape_labels: Option<BTreeSet<u8>>,
}

impl RoiSpec {
    pub fn new(name: impl Into<String>, labels: impl IntoIterator<Item = u8>) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            labels: labels.into_iter().collect(),
            shape_labels: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidArgument("ROI name must not be empty".into()));
        }
        if self.labels.is_empty() {
            return Err(Error::InvalidArgument(format!("ROI {} has no labels", self.name)));
        }
        let shape = self.shape_labels.iter().flatten();
        if self.shape_labels.as_ref().is_some_and(|s| s.is_empty()) {
            return Err(Error::InvalidArgument(format!("ROI {} has an empty shape label set", self.name)));
        }
        if let Some(bad) = self
            .labels
            .iter()
            .chain(shape)
            .find(|l| ![LABEL_NECROTIC, LABEL_EDEMA, LABEL_ENHANCING].contains(l))
        {
            return Err(Error::InvalidArgument(format!(
                "ROI {} uses label {bad}; only 1, 2, 4 may be selected",
                self.name
            )));
        }
        Ok(())
    }

    /// Necrotic core, `{1}`.
    pub fn roi1() -> Self {
        Self::new("roi1", [LABEL_NECROTIC]).unwrap()
    }

    /// Enhancing tumor, `{4}`, with shape taken from `{1, 4}`.
    pub fn roi2() -> Self {
        Self::new("roi2", [LABEL_ENHANCING])
            .unwrap()
            .with_shape_labels([LABEL_NECROTIC, LABEL_ENHANCING])
    }

    pub fn with_shape_labels(mut self, labels: impl IntoIterator<Item = u8>) -> Self {
        self.shape_labels = Some(labels.into_iter().collect());
        self
    }

    /// The ROI whose mask feeds the shape features.
    pub fn shape_roi(&self) -> RoiSpec {
        match &self.shape_labels {
            Some(labels) => RoiSpec {
                name: self.name.clone(),
                labels: labels.clone(),
                shape_labels: None,
            },
            None => self.clone(),
        }
    }

    /// Peritumoral edema, `{2}`.
    pub fn edema() -> Self {
        Self::new("edema", [LABEL_EDEMA]).unwrap()
    }

    /// Whole tumor, `{1, 2, 4}`.
    pub fn whole_tumor() -> Self {
        Self::new("whole", [LABEL_NECROTIC, LABEL_EDEMA, LABEL_ENHANCING]).unwrap()
    }

    /// Necrotic plus enhancing, `{1, 4}`.
    pub fn tumor_core() -> Self {
        Self::new("core", [LABEL_NECROTIC, LABEL_ENHANCING]).unwrap()
    }
}

/// Pixel connectivity for component labelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    geometry: GridGeometry,
    bits: Vec<bool>,
    count: usize,
}

impl BinaryMask {
    pub fn new(geometry: GridGeometry, bits: Vec<bool>) -> Result<Self> {
        geometry.validate()?;
        if bits.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "mask has {} bits, geometry needs {}",
                bits.len(),
                geometry.len()
            )));
        }
        let count = bits.iter().filter(|&&b| b).count();
        Ok(Self { geometry, bits, count })
    }

    pub fn empty(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            bits: vec![false; geometry.len()],
            count: 0,
        }
    }

    pub fn from_fn(geometry: GridGeometry, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(geometry.len());
        for row in 0..geometry.height {
            for col in 0..geometry.width {
                bits.push(f(col, row));
            }
        }
        Self::new(geometry, bits)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn pixel_count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[self.geometry.index(col, row)]
    }

    /// Like [`get`](Self::get) but `false` outside the grid.
    #[inline]
    pub fn get_signed(&self, col: isize, row: isize) -> bool {
        col >= 0
            && row >= 0
            && (col as usize) < self.geometry.width
            && (row as usize) < self.geometry.height
            && self.bits[row as usize * self.geometry.width + col as usize]
    }

    /// Row-major indices of set pixels.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.geometry.ensure_same(&other.geometry)?;
        BinaryMask::new(
            self.geometry,
            self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect(),
        )
    }

    pub fn intersects(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).any(|(a, b)| *a && *b)
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    pub fn rotated90(&self) -> Self {
        let g = self.geometry;
        Self {
            geometry: g.transposed(),
            bits: rotate90(&self.bits, g.width, g.height),
            count: self.count,
        }
    }

    /// Shifts the pattern by whole pixels; pixels pushed off the grid are lost.
    pub fn translated(&self, dx: isize, dy: isize) -> Self {
        let g = self.geometry;
        let bits = (0..g.len())
            .map(|i| {
                let (c, r) = g.coords(i);
                self.get_signed(c as isize - dx, r as isize - dy)
            })
            .collect();
        BinaryMask::new(g, bits).expect("same geometry")
    }

    /// Set pixels outside `self` within Chebyshev distance `radius` of it.
    pub fn outer_ring(&self, radius: usize) -> BinaryMask {
        let g = self.geometry;
        let r = radius as isize;
        let mut ring = vec![false; g.len()];
        for i in self.indices() {
            let (c, row) = g.coords(i);
            for dy in -r..=r {
                for dx in -r..=r {
                    let (cc, rr) = (c as isize + dx, row as isize + dy);
                    if cc >= 0 && rr >= 0 && (cc as usize) < g.width && (rr as usize) < g.height {
                        let j = rr as usize * g.width + cc as usize;
                        if !self.bits[j] {
                            ring[j] = true;
                        }
                    }
                }
            }
        }
        BinaryMask::new(g, ring).expect("same geometry")
    }

    /// Sub-mask of the window starting at `(col0, row0)`. The geometry keeps
    /// the spacing; coordinates restart at the window corner.
    pub fn crop(&self, col0: usize, row0: usize, width: usize, height: usize) -> Result<BinaryMask> {
        let g = self.geometry;
        if col0 + width > g.width || row0 + height > g.height {
            return Err(Error::InvalidGeometry("crop window exceeds the grid".into()));
        }
        let out = GridGeometry::new(width, height, g.spacing_x, g.spacing_y)?;
        let mut bits = Vec::with_capacity(out.len());
        for r in row0..row0 + height {
            bits.extend_from_slice(&self.bits[r * g.width + col0..r * g.width + col0 + width]);
        }
        BinaryMask::new(out, bits)
    }

    /// The mask cropped to the bounding box of its set pixels.
    pub fn cropped_to_content(&self) -> Result<BinaryMask> {
        let (c0, r0, c1, r1) = self
            .bounding_box()
            .ok_or_else(|| Error::EmptyMask("cannot crop an empty mask".into()))?;
        self.crop(c0, r0, c1 - c0 + 1, r1 - r0 + 1)
    }

    /// Bounding box `(col_min, row_min, col_max, row_max)` of set pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let g = self.geometry;
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for i in self.indices() {
            let (c, r) = g.coords(i);
            bbox = Some(match bbox {
                None => (c, r, c, r),
                Some((c0, r0, c1, r1)) => (c0.min(c), r0.min(r), c1.max(c), r1.max(r)),
            });
        }
        bbox
    }
}

/// Pixels whose label belongs to `roi`.
pub fn mask_from_labels(labels: &LabelGrid, roi: &RoiSpec) -> BinaryMask {
    let bits = labels.data().iter().map(|l| roi.labels.contains(l)).collect();
    BinaryMask::new(*labels.geometry(), bits).expect("label grid geometry is valid")
}

/// Splits `mask` into maximal connected pieces, sorted by size (descending)
/// and then by smallest row-major index.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Vec<BinaryMask> {
    let g = *mask.geometry();
    let mut component_of = vec![usize::MAX; g.len()];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut stack = Vec::new();
    for start in mask.indices() {
        if component_of[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = Vec::new();
        component_of[start] = id;
        stack.push(start);
        while let Some(p) = stack.pop() {
            members.push(p);
            let (c, r) = g.coords(p);
            for &(dx, dy) in connectivity.offsets() {
                let (cc, rr) = (c as isize + dx, r as isize + dy);
                if mask.get_signed(cc, rr) {
                    let q = rr as usize * g.width + cc as usize;
                    if component_of[q] == usize::MAX {
                        component_of[q] = id;
                        stack.push(q);
                    }
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
        .into_iter()
        .map(|members| {
            let mut bits = vec![false; g.len()];
            for p in &members {
                bits[*p] = true;
            }
            BinaryMask {
                geometry: g,
                bits,
                count: members.len(),
            }
        })
        .collect()
}

/// Disk of the given diameter around a physical center: a pixel is set when
/// its center lies within `diameter / 2` of `center`.
pub fn circular_mask(geometry: &GridGeometry, center: (f64, f64), diameter: f64) -> Result<BinaryMask> {
    geometry.validate()?;
    if !(diameter > 0.0 && diameter.is_finite()) {
        return Err(Error::InvalidArgument(format!("diameter must be > 0, got {diameter}")));
    }
    if !(center.0.is_finite() && center.1.is_finite()) {
        return Err(Error::InvalidArgument("circle center must be finite".into()));
    }
    let r2 = (diameter / 2.0).powi(2);
    let mask = BinaryMask::from_fn(*geometry, |c, r| {
        let (x, y) = geometry.center_mm(c, r);
        (x - center.0).powi(2) + (y - center.1).powi(2) <= r2
    })?;
    if mask.is_empty() {
        return Err(Error::Infeasible(format!(
            "circle of diameter {diameter} mm at ({}, {}) covers no pixel of the grid",
            center.0, center.1
        )));
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(w: usize, h: usize) -> GridGeometry {
        GridGeometry::unit(w, h).unwrap()
    }

    #[test]
    fn roi_spec_validation() {
        assert!(RoiSpec::new("x", [3]).is_err());
        assert!(RoiSpec::new("x", []).is_err());
        assert!(RoiSpec::new("", [1]).is_err());
        assert_eq!(RoiSpec::tumor_core().labels.len(), 2);
    }

    #[test]
    fn masks_from_labels() {
        let g = unit(3, 1);
        let empty = LabelGrid::background(g).unwrap();
        assert!(mask_from_labels(&empty, &RoiSpec::roi1()).is_empty());
        let labels = LabelGrid::new(g, vec![1, 0, 4]).unwrap();
        let m = mask_from_labels(&labels, &RoiSpec::tumor_core());
        assert_eq!(m.bits(), &[true, false, true]);
    }

    #[test]
    fn random_label_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = unit(17, 11);
        let data: Vec<u8> = (0..g.len()).map(|_| [0, 1, 2, 4][rng.random_range(0..4)]).collect();
        let fours = data.iter().filter(|&&l| l == 4).count();
        let labels = LabelGrid::new(g, data).unwrap();
        assert_eq!(mask_from_labels(&labels, &RoiSpec::roi2()).pixel_count(), fours);
    }

    #[test]
    fn diagonal_pixels_and_connectivity() {
        let m = BinaryMask::new(unit(2, 2), vec![true, false, false, true]).unwrap();
        assert_eq!(connected_components(&m, Connectivity::Four).len(), 2);
        assert_eq!(connected_components(&m, Connectivity::Eight).len(), 1);
    }

    #[test]
    fn components_partition_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let g = unit(rng.random_range(1..12), rng.random_range(1..12));
            let bits = (0..g.len()).map(|_| rng.random_bool(0.45)).collect();
            let m = BinaryMask::new(g, bits).unwrap();
            for conn in [Connectivity::Four, Connectivity::Eight] {
                let comps = connected_components(&m, conn);
                let mut cover = vec![0u32; g.len()];
                for c in &comps {
                    assert!(c.pixel_count() > 0);
                    for i in c.indices() {
                        cover[i] += 1;
                    }
                }
                for (i, &b) in m.bits().iter().enumerate() {
                    assert_eq!(cover[i], u32::from(b));
                }
                for w in comps.windows(2) {
                    let key = |c: &BinaryMask| (std::cmp::Reverse(c.pixel_count()), c.indices().next());
                    assert!(key(&w[0]) < key(&w[1]));
                }
            }
        }
    }

    #[test]
    fn tiny_circle_is_single_pixel() {
        let g = GridGeometry::new(9, 9, 1.5, 1.5).unwrap();
        let m = circular_mask(&g, (4.0 * 1.5, 3.0 * 1.5), 1.0).unwrap();
        assert_eq!(m.pixel_count(), 1);
        assert!(m.get(4, 3));
    }

    #[test]
    fn circle_outside_grid_fails() {
        let g = unit(8, 8);
        assert!(circular_mask(&g, (100.0, 100.0), 1.0).is_err());
        assert!(circular_mask(&g, (2.0, 2.0), 0.0).is_err());
    }

    #[test]
    fn circle_area_converges() {
        let g = unit(128, 128);
        for d in [40.0, 51.0, 64.0, 90.0] {
            let m = circular_mask(&g, (63.3, 64.1), d).unwrap();
            let ratio = m.pixel_count() as f64 / (std::f64::consts::PI * (d / 2.0) * (d / 2.0));
            assert!((0.95..=1.05).contains(&ratio), "d={d} ratio={ratio}");
        }
    }

    #[test]
    fn circle_translation_equivariance() {
        let g = unit(64, 64);
        let a = circular_mask(&g, (20.3, 25.7), 13.0).unwrap();
        let b = circular_mask(&g, (27.3, 22.7), 13.0).unwrap();
        assert_eq!(a.translated(7, -3), b);
    }

    #[test]
    fn outer_ring_excludes_mask() {
        let g = unit(7, 7);
        let m = BinaryMask::from_fn(g, |c, r| c == 3 && r == 3).unwrap();
        let ring = m.outer_ring(2);
        assert_eq!(ring.pixel_count(), 24);
        assert!(!ring.get(3, 3));
    }
}
