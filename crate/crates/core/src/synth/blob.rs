//! Star-convex Fourier blob: the forward model of the inverse synthesis.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, ImageGrid, LabelGrid, LABEL_ENHANCING, LABEL_NECROTIC};

pub const FOURIER_MODES: usize = 6;
/// Length of [`BlobParams::to_vector`].
pub const PARAM_COUNT: usize = 3 + 2 * FOURIER_MODES + 5;
const RADIUS_SAMPLES: usize = 720;
pub const CORE_RATIO_RANGE: (f64, f64) = (0.05, 0.95);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobParams {
    /// Physical center (x, y) in mm.
    pub center: (f64, f64),
    /// Base radius in mm.
    pub r0: f64,
    pub a: [f64; FOURIER_MODES],
    pub b: [f64; FOURIER_MODES],
    pub core_ratio: f64,
    pub mu_ncr: f64,
    pub mu_et: f64,
    pub sigma_tex: f64,
    pub smooth_px: f64,
}

impl BlobParams {
    pub fn disk(center: (f64, f64), r0: f64, core_ratio: f64, mu_ncr: f64, mu_et: f64) -> Self {
        Self {
            center,
            r0,
            a: [0.0; FOURIER_MODES],
            b: [0.0; FOURIER_MODES],
            core_ratio,
            mu_ncr,
            mu_et,
            sigma_tex: 0.0,
            smooth_px: 0.0,
        }
    }

    /// Relative radial modulation `1 + sum a_k cos k theta + b_k sin k theta`.
    fn modulation(&self, cos1: f64, sin1: f64) -> f64 {
        let (mut c, mut s) = (cos1, sin1);
        let mut m = 1.0;
        for k in 0..FOURIER_MODES {
            m += self.a[k] * c + self.b[k] * s;
            let (cn, sn) = (c * cos1 - s * sin1, s * cos1 + c * sin1);
            c = cn;
            s = sn;
        }
        m
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.r0 * self.modulation(theta.cos(), theta.sin())
    }

    /// Minimum and maximum of `r(theta)` on the sampling grid.
    pub fn radius_bounds(&self) -> (f64, f64) {
        (0..RADIUS_SAMPLES)
            .map(|i| self.radius(i as f64 * std::f64::consts::TAU / RADIUS_SAMPLES as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.to_vector();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("blob parameters must be finite".into()));
        }
        if self.r0 <= 0.0 {
            return Err(Error::InvalidArgument(format!("r0 must be > 0, got {}", self.r0)));
        }
        if !(self.core_ratio > CORE_RATIO_RANGE.0 && self.core_ratio < CORE_RATIO_RANGE.1) {
            return Err(Error::InvalidArgument(format!(
                "core_ratio must lie in (0.05, 0.95), got {}",
                self.core_ratio
            )));
        }
        if self.sigma_tex < 0.0 || self.smooth_px < 0.0 {
            return Err(Error::InvalidArgument("sigma_tex and smooth_px must be >= 0".into()));
        }
        let (lo, _) = self.radius_bounds();
        if lo <= 0.0 {
            return Err(Error::InvalidArgument("r(theta) must stay positive".into()));
        }
        Ok(())
    }

    pub fn to_vector(&self) -> [f64; PARAM_COUNT] {
        let mut v = [0.0; PARAM_COUNT];
        v[0] = self.center.0;
        v[1] = self.center.1;
        v[2] = self.r0;
        v[3..3 + FOURIER_MODES].copy_from_slice(&self.a);
        v[3 + FOURIER_MODES..3 + 2 * FOURIER_MODES].copy_from_slice(&self.b);
        let t = 3 + 2 * FOURIER_MODES;
        v[t] = self.core_ratio;
        v[t + 1] = self.mu_ncr;
        v[t + 2] = self.mu_et;
        v[t + 3] = self.sigma_tex;
        v[t + 4] = self.smooth_px;
        v
    }

    pub fn from_vector(v: &[f64; PARAM_COUNT]) -> Self {
        let t = 3 + 2 * FOURIER_MODES;
        let mut a = [0.0; FOURIER_MODES];
        let mut b = [0.0; FOURIER_MODES];
        a.copy_from_slice(&v[3..3 + FOURIER_MODES]);
        b.copy_from_slice(&v[3 + FOURIER_MODES..t]);
        Self {
            center: (v[0], v[1]),
            r0: v[2],
            a,
            b,
            core_ratio: v[t],
            mu_ncr: v[t + 1],
            mu_et: v[t + 2],
            sigma_tex: v[t + 3],
            smooth_px: v[t + 4],
        }
    }
}

/// Renders blobs on a fixed grid. The texture noise field is drawn once per
/// seed, so nearby parameter vectors see the same noise pattern.
#[derive(Debug, Clone)]
pub struct BlobRenderer {
    geometry: GridGeometry,
    noise: Vec<f64>,
}

/// Pixel box `[c0, c1) x [r0, r1)` covering a blob.
type Window = (usize, usize, usize, usize);

impl BlobRenderer {
    pub fn new(geometry: GridGeometry, seed: u64) -> Result<Self> {
        geometry.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = (0..geometry.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        Ok(Self { geometry, noise })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    fn window(&self, params: &BlobParams) -> Result<Window> {
        let g = &self.geometry;
        let (_, rmax) = params.radius_bounds();
        // Small margin: r(theta) between samples may exceed the sampled max.
        let reach = rmax * 1.01 + 1e-9;
        let (cx, cy) = params.center;
        let x_lim = (g.width - 1) as f64 * g.spacing_x;
        let y_lim = (g.height - 1) as f64 * g.spacing_y;
        if cx - reach < -0.5 * g.spacing_x
            || cy - reach < -0.5 * g.spacing_y
            || cx + reach > x_lim + 0.5 * g.spacing_x
            || cy + reach > y_lim + 0.5 * g.spacing_y
        {
            return Err(Error::Infeasible("blob extends outside the grid".into()));
        }
        let clamp = |v: f64, n: usize| (v.max(0.0) as usize).min(n);
        Ok((
            clamp(((cx - reach) / g.spacing_x).floor(), g.width),
            clamp(((cx + reach) / g.spacing_x).ceil() + 1.0, g.width),
            clamp(((cy - reach) / g.spacing_y).floor(), g.height),
            clamp(((cy + reach) / g.spacing_y).ceil() + 1.0, g.height),
        ))
    }

    /// Label raster only: 1 inside `core_ratio * r(theta)`, 4 inside `r(theta)`.
    pub fn labels(&self, params: &BlobParams) -> Result<LabelGrid> {
        params.validate()?;
        let win = self.window(params)?;
        let data = self.label_data(params, win);
        LabelGrid::new(self.geometry, data)
    }

    fn label_data(&self, p: &BlobParams, (c0, c1, r0, r1): Window) -> Vec<u8> {
        let g = &self.geometry;
        let mut out = vec![0u8; g.len()];
        for row in r0..r1 {
            for col in c0..c1 {
                let (x, y) = g.center_mm(col, row);
                let (dx, dy) = (x - p.center.0, y - p.center.1);
                let d = dx.hypot(dy);
                let r = if d == 0.0 {
                    p.r0 * p.modulation(1.0, 0.0)
                } else {
                    p.r0 * p.modulation(dx / d, dy / d)
                };
                if d < p.core_ratio * r {
                    out[row * g.width + col] = LABEL_NECROTIC;
                } else if d < r {
                    out[row * g.width + col] = LABEL_ENHANCING;
                }
            }
        }
        out
    }

    /// Renders the blob over `background`. Pixels outside the blob keep their
    /// background values bit for bit.
    pub fn render(&self, params: &BlobParams, background: &ImageGrid) -> Result<(ImageGrid, LabelGrid)> {
        params.validate()?;
        self.geometry.ensure_same(background.geometry())?;
        let g = self.geometry;
        let win = self.window(params)?;
        let labels = self.label_data(params, win);
        let radius = params.smooth_px.round() as usize;
        let (c0, c1, r0, r1) = win;
        // Blur window: the blob box grown by the blur radius.
        let (bc0, bc1) = (c0.saturating_sub(radius), (c1 + radius).min(g.width));
        let (br0, br1) = (r0.saturating_sub(radius), (r1 + radius).min(g.height));
        let (bw, bh) = (bc1 - bc0, br1 - br0);
        let mut field = vec![0.0; bw * bh];
        for row in br0..br1 {
            for col in bc0..bc1 {
                let i = row * g.width + col;
                field[(row - br0) * bw + (col - bc0)] = match labels[i] {
                    LABEL_NECROTIC => params.mu_ncr + params.sigma_tex * self.noise[i],
                    LABEL_ENHANCING => params.mu_et + params.sigma_tex * self.noise[i],
                    _ => background.data()[i],
                };
            }
        }
        if radius > 0 {
            box_blur(&mut field, bw, bh, radius);
        }
        let mut data = background.data().to_vec();
        for row in r0..r1 {
            for col in c0..c1 {
                let i = row * g.width + col;
                if labels[i] != 0 {
                    data[i] = field[(row - br0) * bw + (col - bc0)];
                }
            }
        }
        Ok((ImageGrid::new(g, data)?, LabelGrid::new(g, labels)?))
    }
}

/// Separable mean filter of half-width `radius`; windows are truncated at
/// the buffer edges.
fn box_blur(buf: &mut [f64], w: usize, h: usize, radius: usize) {
    let mut tmp = vec![0.0; buf.len()];
    for row in 0..h {
        let line = &buf[row * w..(row + 1) * w];
        for col in 0..w {
            let (lo, hi) = (col.saturating_sub(radius), (col + radius + 1).min(w));
            tmp[row * w + col] = line[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        }
    }
    for col in 0..w {
        for row in 0..h {
            let (lo, hi) = (row.saturating_sub(radius), (row + radius + 1).min(h));
            let s: f64 = (lo..hi).map(|r| tmp[r * w + col]).sum();
            buf[row * w + col] = s / (hi - lo) as f64;
        }
    }
}

/// One-shot render with a fresh noise field drawn from `seed`.
pub fn render_blob(
    params: &BlobParams,
    geometry: &GridGeometry,
    background: &ImageGrid,
    seed: u64,
) -> Result<(ImageGrid, LabelGrid)> {
    BlobRenderer::new(*geometry, seed)?.render(params, background)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{roi_features, FamilySet};
    use crate::intensity::DiscretizationConfig;
    use crate::roi::RoiSpec;

    fn geom() -> GridGeometry {
        GridGeometry::unit(96, 96).unwrap()
    }

    #[test]
    fn vector_round_trip() {
        let mut p = BlobParams::disk((40.0, 41.0), 12.0, 0.4, 200.0, 800.0);
        p.a[2] = 0.1;
        p.b[5] = -0.05;
        p.sigma_tex = 20.0;
        p.smooth_px = 1.2;
        assert_eq!(BlobParams::from_vector(&p.to_vector()), p);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = BlobParams::disk((48.0, 48.0), 10.0, 0.5, 0.0, 1.0);
        p.a[0] = 1.5;
        assert!(p.validate().is_err());
        let q = BlobParams::disk((48.0, 48.0), 10.0, 0.97, 0.0, 1.0);
        assert!(q.validate().is_err());
        let bg = ImageGrid::filled(geom(), 0.0).unwrap();
        let out = BlobParams::disk((5.0, 48.0), 10.0, 0.5, 0.0, 1.0);
        assert!(matches!(render_blob(&out, &geom(), &bg, 0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn disk_labels_and_core_ratio() {
        let bg = ImageGrid::filled(geom(), 500.0).unwrap();
        let p = BlobParams::disk((48.0, 48.0), 30.0, 0.5, 200.0, 900.0);
        let (img, labels) = render_blob(&p, &geom(), &bg, 1).unwrap();
        let core = labels.count(LABEL_NECROTIC) as f64;
        let all = core + labels.count(LABEL_ENHANCING) as f64;
        assert!((core / all / 0.25 - 1.0).abs() < 0.1);
        assert!((all / (std::f64::consts::PI * 900.0) - 1.0).abs() < 0.02);
        let disc = DiscretizationConfig::default();
        let f = roi_features(&img, &labels, &RoiSpec::roi2(), &disc, FamilySet::ALL).unwrap();
        let s = f.shape.unwrap().sphericity;
        // The midpoint mesh keeps digital-disk sphericity near 0.95.
        assert!(s > 0.93 && s < 0.96, "{s}");
        for (i, &l) in labels.data().iter().enumerate() {
            match l {
                0 => assert_eq!(img.data()[i], 500.0),
                LABEL_NECROTIC => assert_eq!(img.data()[i], 200.0),
                _ => assert_eq!(img.data()[i], 900.0),
            }
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let bg = ImageGrid::from_fn(geom(), |c, r| (c + 2 * r) as f64).unwrap();
        let mut p = BlobParams::disk((50.0, 45.0), 15.0, 0.45, 250.0, 800.0);
        p.a[1] = 0.12;
        p.b[2] = -0.08;
        p.sigma_tex = 30.0;
        p.smooth_px = 1.0;
        let a = render_blob(&p, &geom(), &bg, 3).unwrap();
        let b = render_blob(&p, &geom(), &bg, 3).unwrap();
        let c = render_blob(&p, &geom(), &bg, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1, c.1);
        assert_ne!(a.0, c.0);
        for (i, &l) in a.1.data().iter().enumerate() {
            if l == 0 {
                assert_eq!(a.0.data()[i].to_bits(), bg.data()[i].to_bits());
            }
        }
    }

    #[test]
    fn box_blur_preserves_constant() {
        let mut buf = vec![3.5; 35];
        box_blur(&mut buf, 7, 5, 2);
        assert!(buf.iter().all(|&v| (v - 3.5).abs() < 1e-12));
    }
}
