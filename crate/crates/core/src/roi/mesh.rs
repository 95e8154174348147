//! Marching-squares boundary of a binary mask.
//!
//! Vertices sit on midpoints between an inside and an outside pixel center.
//! Ambiguous saddle cells treat the cell center as inside, so diagonal
//! neighbours are joined (matching 8-connectivity of the foreground).
//! Loops are oriented so outer boundaries have positive signed area and
//! holes negative.

use std::collections::BTreeMap;

use super::BinaryMask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMesh {
    /// Closed loops of `(x, y)` vertices in mm; the last vertex connects back
    /// to the first.
    pub loops: Vec<Vec<(f64, f64)>>,
}

impl BoundaryMesh {
    pub fn signed_loop_area(vertices: &[(f64, f64)]) -> f64 {
        let n = vertices.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let (x0, y0) = vertices[i];
                let (x1, y1) = vertices[(i + 1) % n];
                x0 * y1 - x1 * y0
            })
            .sum();
        0.5 * twice
    }

    pub fn loop_length(vertices: &[(f64, f64)]) -> f64 {
        let n = vertices.len();
        (0..n)
            .map(|i| {
                let (x0, y0) = vertices[i];
                let (x1, y1) = vertices[(i + 1) % n];
                (x1 - x0).hypot(y1 - y0)
            })
            .sum()
    }

    /// Enclosed area: outer loops minus holes.
    pub fn area(&self) -> f64 {
        self.loops.iter().map(|l| Self::signed_loop_area(l)).sum()
    }

    /// Total length of all loops.
    pub fn perimeter(&self) -> f64 {
        self.loops.iter().map(|l| Self::loop_length(l)).sum()
    }

    pub fn vertices(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.loops.iter().flatten().copied()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.loops
            .iter()
            .flat_map(|l| {
                (0..l.len()).map(move |i| {
                    let (x0, y0) = l[i];
                    let (x1, y1) = l[(i + 1) % l.len()];
                    (x1 - x0).hypot(y1 - y0)
                })
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the marching-squares boundary of a non-empty mask.
pub fn boundary_mesh(mask: &BinaryMask) -> Result<BoundaryMesh> {
    if mask.is_empty() {
        return Err(Error::EmptyMask("boundary mesh of an empty mask".into()));
    }
    let g = *mask.geometry();
    // Edge midpoints in doubled pixel coordinates: pixel (c, r) is (2c, 2r).
    type Key = (i64, i64);
    let mut next: BTreeMap<Key, Key> = BTreeMap::new();

    let (w, h) = (g.width as isize, g.height as isize);
    for cy in -1..h {
        for cx in -1..w {
            let corners = [
                mask.get_signed(cx, cy),
                mask.get_signed(cx + 1, cy),
                mask.get_signed(cx + 1, cy + 1),
                mask.get_signed(cx, cy + 1),
            ];
            let inside = corners.iter().filter(|&&b| b).count();
            if inside == 0 || inside == 4 {
                continue;
            }
            let (x2, y2) = (2 * cx as i64, 2 * cy as i64);
            // top, right, bottom, left: each runs from corner k to corner k+1.
            let mids: [Key; 4] = [(x2 + 1, y2), (x2 + 2, y2 + 1), (x2 + 1, y2 + 2), (x2, y2 + 1)];
            let exits: Vec<usize> = (0..4).filter(|&e| corners[e] && !corners[(e + 1) % 4]).collect();
            for &e in &exits {
                let entry = (1..4)
                    .map(|k| (e + k) % 4)
                    .find(|&f| !corners[f] && corners[(f + 1) % 4])
                    .expect("every exit has a matching entry");
                let prev = next.insert(mids[e], mids[entry]);
                debug_assert!(prev.is_none(), "edge midpoint used twice as a segment start");
            }
        }
    }

    let to_mm = |k: Key| (k.0 as f64 * 0.5 * g.spacing_x, k.1 as f64 * 0.5 * g.spacing_y);
    let mut loops = Vec::new();
    while let Some((&start, _)) = next.iter().next() {
        let mut vertices = Vec::new();
        let mut cur = start;
        loop {
            vertices.push(to_mm(cur));
            let nxt = next.remove(&cur).expect("marching-squares loops are closed");
            if nxt == start {
                break;
            }
            cur = nxt;
        }
        loops.push(vertices);
    }
    Ok(BoundaryMesh { loops })
}

/// Largest distance between any two mesh vertices.
pub fn maximum_diameter(mesh: &BoundaryMesh) -> f64 {
    let hull = convex_hull(mesh.vertices().collect());
    let mut best = 0.0f64;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            let d = (hull[i].0 - hull[j].0).hypot(hull[i].1 - hull[j].1);
            best = best.max(d);
        }
    }
    best
}

/// Andrew's monotone chain; keeps only strict turns.
fn convex_hull(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}
