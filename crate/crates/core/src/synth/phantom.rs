//! Seeded desk-scale phantoms: smooth tissue background plus one planted blob.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::blob::{BlobParams, BlobRenderer, FOURIER_MODES};
use crate::error::{Error, Result};
use crate::features::extract_features;
use crate::grid::{GridGeometry, ImageGrid, LabelGrid};
use crate::intensity::DiscretizationConfig;
use crate::roi::RoiSpec;

pub const MIN_PHANTOM_SIZE: usize = 64;
const BACKGROUND_BASE: f64 = 500.0;
const BACKGROUND_NOISE: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub image: ImageGrid,
    pub labels: LabelGrid,
    pub params: BlobParams,
    pub seed: u64,
}

/// Sum of eight low-frequency cosines, used as the tissue background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Wave {
    amplitude: f64,
    fx: f64,
    fy: f64,
    phase: f64,
}

fn background(geometry: GridGeometry, rng: &mut ChaCha8Rng) -> Result<ImageGrid> {
    let waves: Vec<Wave> = (0..8)
        .map(|_| Wave {
            amplitude: rng.random_range(5.0..35.0),
            fx: rng.random_range(0..=3) as f64,
            fy: rng.random_range(0..=3) as f64,
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        })
        .collect();
    let noise = Normal::new(0.0, BACKGROUND_NOISE).expect("finite std");
    let (w, h) = (geometry.width as f64, geometry.height as f64);
    let mut data = Vec::with_capacity(geometry.len());
    for row in 0..geometry.height {
        for col in 0..geometry.width {
            let (u, v) = (col as f64 / w, row as f64 / h);
            let smooth: f64 = waves
                .iter()
                .map(|k| k.amplitude * (std::f64::consts::TAU * (k.fx * u + k.fy * v) + k.phase).cos())
                .sum();
            data.push(BACKGROUND_BASE + smooth + noise.sample(rng));
        }
    }
    ImageGrid::new(geometry, data)
}

fn random_blob(geometry: &GridGeometry, rng: &mut ChaCha8Rng) -> BlobParams {
    let fov_x = geometry.width as f64 * geometry.spacing_x;
    let fov_y = geometry.height as f64 * geometry.spacing_y;
    let fov = fov_x.min(fov_y);
    let r0 = rng.random_range(0.07..0.14) * fov;
    let mut p = BlobParams::disk((0.0, 0.0), r0, rng.random_range(0.3..0.7), 0.0, 0.0);
    loop {
        for k in 0..FOURIER_MODES {
            let s = Normal::new(0.0, 0.08 / (k + 1) as f64).expect("finite std");
            p.a[k] = s.sample(rng);
            p.b[k] = s.sample(rng);
        }
        if p.radius_bounds().0 >= 0.3 * r0 {
            break;
        }
    }
    let reach = p.radius_bounds().1 * 1.05 + 2.0 * geometry.spacing_x.max(geometry.spacing_y);
    p.center = (
        rng.random_range(reach..(fov_x - reach).max(reach + 1e-9)),
        rng.random_range(reach..(fov_y - reach).max(reach + 1e-9)),
    );
    p.mu_ncr = rng.random_range(150.0..300.0);
    p.mu_et = rng.random_range(700.0..1000.0);
    p.sigma_tex = rng.random_range(15.0..45.0);
    p.smooth_px = rng.random_range(0.0..1.5);
    p
}

/// Deterministic phantom for `seed`. Intensities are rounded to integers.
/// Redraws the blob until both default ROIs yield features.
pub fn make_phantom(seed: u64, geometry: GridGeometry) -> Result<Phantom> {
    geometry.validate()?;
    if geometry.width < MIN_PHANTOM_SIZE || geometry.height < MIN_PHANTOM_SIZE {
        return Err(Error::InvalidArgument(format!(
            "phantoms need at least {MIN_PHANTOM_SIZE}x{MIN_PHANTOM_SIZE} pixels"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bg = background(geometry, &mut rng)?;
    let renderer = BlobRenderer::new(geometry, rng.random())?;
    let rois = [RoiSpec::roi1(), RoiSpec::roi2()];
    for _ in 0..100 {
        let params = random_blob(&geometry, &mut rng);
        let Ok((image, labels)) = renderer.render(&params, &bg) else {
            continue;
        };
        let image = ImageGrid::new(geometry, image.into_data().into_iter().map(f64::round).collect())?;
        let fv = extract_features(&image, &labels, &rois, &DiscretizationConfig::default())?;
        if fv.metadata.absent.is_empty() {
            return Ok(Phantom {
                image,
                labels,
                params,
                seed,
            });
        }
    }
    Err(Error::Infeasible("could not plant a blob with both ROIs present".into()))
}
