//! Tumor removal: discrete harmonic extension of the surrounding tissue
//! (SOR relaxation) plus boundary-matched Gaussian texture.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::roi::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillConfig {
    /// Add Gaussian texture matched to the outer 2-pixel ring.
    pub noise: bool,
    pub seed: u64,
    pub omega: f64,
    pub max_iterations: usize,
    /// Stop once the largest Laplacian residual `|sum(neighbours) - k u|`
    /// drops below this fraction of the boundary intensity range.
    pub tolerance: f64,
}

impl Default for FillConfig {
    fn default() -> Self {
        Self {
            noise: true,
            seed: 0,
            omega: 1.9,
            max_iterations: 10_000,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillOutcome {
    pub image: ImageGrid,
    pub iterations: usize,
    /// Largest residual over masked pixels after the last sweep, before noise.
    pub residual: f64,
    /// Intensity range of the pixels bordering the mask.
    pub boundary_range: f64,
    pub noise_std: f64,
    pub converged: bool,
}

/// Replaces the masked pixels by the harmonic extension of their
/// surroundings; unmasked pixels are copied bit for bit.
pub fn background_fill(image: &ImageGrid, mask: &BinaryMask, config: &FillConfig) -> Result<FillOutcome> {
    let g = *image.geometry();
    g.ensure_same(mask.geometry())?;
    if mask.is_empty() {
        return Err(Error::EmptyMask("nothing to fill".into()));
    }
    if mask.pixel_count() == g.len() {
        return Err(Error::Infeasible("mask covers the whole image; no boundary values".into()));
    }
    if !(config.omega > 0.0 && config.omega < 2.0) {
        return Err(Error::InvalidArgument(format!("SOR omega must lie in (0, 2), got {}", config.omega)));
    }

    let (w, h) = (g.width as isize, g.height as isize);
    let in_grid = |c: isize, r: isize| c >= 0 && r >= 0 && c < w && r < h;
    let nbrs = [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)];

    // Dirichlet boundary: unmasked 4-neighbours of masked pixels.
    let mut boundary = Vec::new();
    let mut seen = vec![false; g.len()];
    for i in mask.indices() {
        let (c, r) = g.coords(i);
        for (dx, dy) in nbrs {
            let (cc, rr) = (c as isize + dx, r as isize + dy);
            if in_grid(cc, rr) {
                let j = rr as usize * g.width + cc as usize;
                if !mask.bits()[j] && !seen[j] {
                    seen[j] = true;
                    boundary.push(image.data()[j]);
                }
            }
        }
    }
    if boundary.is_empty() {
        // Only possible when the mask has no unmasked 4-neighbour anywhere.
        return Err(Error::Infeasible("mask has no unmasked neighbours".into()));
    }
    let lo = boundary.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = boundary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;

    let ring: Vec<f64> = mask.outer_ring(2).indices().map(|i| image.data()[i]).collect();
    let noise_std = sample_std(&ring);

    let mut u = image.data().to_vec();
    let masked: Vec<usize> = mask.indices().collect();
    // Per-pixel neighbour lists; `None` entries are masked (unknown) pixels.
    let stencil: Vec<([usize; 4], usize)> = masked
        .iter()
        .map(|&i| {
            let (c, r) = g.coords(i);
            let mut idx = [0usize; 4];
            let mut k = 0;
            for (dx, dy) in nbrs {
                let (cc, rr) = (c as isize + dx, r as isize + dy);
                if in_grid(cc, rr) {
                    idx[k] = rr as usize * g.width + cc as usize;
                    k += 1;
                }
            }
            (idx, k)
        })
        .collect();

    let (mut iterations, mut residual, mut converged) = (0, 0.0, false);
    if range == 0.0 {
        for &i in &masked {
            u[i] = lo;
        }
        converged = true;
    } else {
        let start = boundary.iter().sum::<f64>() / boundary.len() as f64;
        for &i in &masked {
            u[i] = start;
        }
        let tol = config.tolerance * range;
        let residual_of = |u: &[f64], i: usize, (idx, k): &([usize; 4], usize)| {
            let s: f64 = idx[..*k].iter().map(|&j| u[j]).sum();
            s - *k as f64 * u[i]
        };
        while iterations < config.max_iterations {
            iterations += 1;
            let mut max_res: f64 = 0.0;
            for (&i, st) in masked.iter().zip(&stencil) {
                let res = residual_of(&u, i, st);
                max_res = max_res.max(res.abs());
                u[i] += config.omega * res / st.1 as f64;
            }
            if max_res <= tol {
                residual = masked
                    .iter()
                    .zip(&stencil)
                    .map(|(&i, st)| residual_of(&u, i, st).abs())
                    .fold(0.0, f64::max);
                if residual <= tol {
                    converged = true;
                    break;
                }
            }
        }
        if !converged {
            residual = masked
                .iter()
                .zip(&stencil)
                .map(|(&i, st)| residual_of(&u, i, st).abs())
                .fold(0.0, f64::max);
        }
    }

    if config.noise && noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let normal = Normal::new(0.0, noise_std).expect("finite std");
        for &i in &masked {
            u[i] += normal.sample(&mut rng);
        }
    }

    Ok(FillOutcome {
        image: ImageGrid::new(g, u)?,
        iterations,
        residual,
        boundary_range: range,
        noise_std,
        converged,
    })
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 || values.iter().all(|&v| v == values[0]) {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;
    use crate::roi::circular_mask;

    fn quiet() -> FillConfig {
        FillConfig {
            noise: false,
            ..FillConfig::default()
        }
    }

    #[test]
    fn constant_image_fills_exactly() {
        let g = GridGeometry::unit(20, 20).unwrap();
        let img = ImageGrid::filled(g, 0.3).unwrap();
        let m = circular_mask(&g, (9.0, 10.0), 9.0).unwrap();
        let out = background_fill(&img, &m, &FillConfig::default()).unwrap();
        assert_eq!(out.noise_std, 0.0);
        assert!(out.image.data().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn linear_ramp_is_reproduced() {
        let g = GridGeometry::new(40, 30, 1.0, 0.5).unwrap();
        let img = ImageGrid::from_fn(g, |c, r| 3.0 * c as f64 - 7.0 * r as f64 + 100.0).unwrap();
        let m = circular_mask(&g, (20.0, 7.5), 12.0).unwrap();
        let out = background_fill(&img, &m, &quiet()).unwrap();
        assert!(out.converged);
        let range = out.boundary_range;
        for i in m.indices() {
            assert!((out.image.data()[i] - img.data()[i]).abs() <= 1e-6 * range);
        }
    }

    #[test]
    fn outside_pixels_untouched_and_noise_seeded() {
        let g = GridGeometry::unit(24, 24).unwrap();
        let img = ImageGrid::from_fn(g, |c, r| ((c * 13 + r * 7) % 11) as f64).unwrap();
        let m = circular_mask(&g, (12.0, 12.0), 10.0).unwrap();
        let cfg = FillConfig { seed: 9, ..FillConfig::default() };
        let a = background_fill(&img, &m, &cfg).unwrap();
        let b = background_fill(&img, &m, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.noise_std > 0.0);
        for i in 0..g.len() {
            if !m.bits()[i] {
                assert_eq!(a.image.data()[i].to_bits(), img.data()[i].to_bits());
            }
        }
    }

    #[test]
    fn whole_image_mask_fails() {
        let g = GridGeometry::unit(4, 4).unwrap();
        let img = ImageGrid::filled(g, 1.0).unwrap();
        let m = BinaryMask::new(g, vec![true; 16]).unwrap();
        assert!(matches!(background_fill(&img, &m, &quiet()), Err(Error::Infeasible(_))));
        assert!(background_fill(&img, &BinaryMask::empty(g), &quiet()).is_err());
    }

    #[test]
    fn border_touching_mask_respects_maximum_principle() {
        let g = GridGeometry::unit(16, 16).unwrap();
        let img = ImageGrid::from_fn(g, |c, r| ((c as f64) * 0.7).sin() * 10.0 + r as f64).unwrap();
        let m = BinaryMask::from_fn(g, |c, r| c < 6 && r < 9).unwrap();
        let out = background_fill(&img, &m, &quiet()).unwrap();
        assert!(out.converged);
        let ring: Vec<f64> = m.outer_ring(1).indices().map(|i| img.data()[i]).collect();
        let lo = ring.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ring.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for i in m.indices() {
            let v = out.image.data()[i];
            assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }
    }
}
