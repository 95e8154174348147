//! Nine 2D shape descriptors of a mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roi::{boundary_mesh, maximum_diameter, BinaryMask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeFeatures {
    pub mesh_surface: f64,
    pub pixel_surface: f64,
    pub perimeter: f64,
    pub perimeter_surface_ratio: f64,
    pub sphericity: f64,
    pub maximum_diameter: f64,
    pub major_axis_length: f64,
    pub minor_axis_length: f64,
    pub elongation: f64,
}

impl ShapeFeatures {
    pub const NAMES: [&'static str; 9] = [
        "elongation",
        "major_axis_length",
        "maximum_diameter",
        "mesh_surface",
        "minor_axis_length",
        "perimeter",
        "perimeter_surface_ratio",
        "pixel_surface",
        "sphericity",
    ];

    /// `(name, value)` pairs in alphabetical order.
    pub fn named(&self) -> [(&'static str, f64); 9] {
        [
            ("elongation", self.elongation),
            ("major_axis_length", self.major_axis_length),
            ("maximum_diameter", self.maximum_diameter),
            ("mesh_surface", self.mesh_surface),
            ("minor_axis_length", self.minor_axis_length),
            ("perimeter", self.perimeter),
            ("perimeter_surface_ratio", self.perimeter_surface_ratio),
            ("pixel_surface", self.pixel_surface),
            ("sphericity", self.sphericity),
        ]
    }
}

/// Eigenvalues (descending) of the population covariance of the physical
/// pixel-center coordinates.
pub fn principal_moments(mask: &BinaryMask) -> (f64, f64) {
    let g = mask.geometry();
    let n = mask.pixel_count() as f64;
    let pts: Vec<(f64, f64)> = mask
        .indices()
        .map(|i| {
            let (c, r) = g.coords(i);
            g.center_mm(c, r)
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let (a, c, b) = (sxx / n, syy / n, sxy / n);
    let mean = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let l1 = mean + disc;
    let l2 = (mean - disc).max(0.0);
    (l1, l2)
}

/// Shape features of a non-empty mask. The mask is first cropped to its
/// bounding box, so results depend only on the pixel pattern and spacing,
/// not on where the pattern sits in the grid.
pub fn compute_shape(mask: &BinaryMask) -> Result<ShapeFeatures> {
    if mask.is_empty() {
        return Err(Error::EmptyMask("shape features need at least one pixel".into()));
    }
    let mask = &mask.cropped_to_content()?;
    let g = mask.geometry();
    let mesh = boundary_mesh(mask)?;
    let mesh_surface = mesh.area();
    let perimeter = mesh.perimeter();
    let pixel_surface = mask.pixel_count() as f64 * g.pixel_area();
    let (l1, l2) = principal_moments(mask);
    let elongation = if l1 > 0.0 { (l2 / l1).sqrt() } else { 1.0 };
    Ok(ShapeFeatures {
        mesh_surface,
        pixel_surface,
        perimeter,
        perimeter_surface_ratio: perimeter / mesh_surface,
        sphericity: 2.0 * (std::f64::consts::PI * mesh_surface).sqrt() / perimeter,
        maximum_diameter: maximum_diameter(&mesh),
        major_axis_length: 4.0 * l1.sqrt(),
        minor_axis_length: 4.0 * l2.sqrt(),
        elongation,
    })
}
