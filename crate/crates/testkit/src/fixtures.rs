//! Seeded random ROIs for oracle comparisons.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RoiFixture {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl RoiFixture {
    pub fn inside(&self) -> Vec<f64> {
        (0..self.values.len()).filter(|&i| self.mask[i]).map(|i| self.values[i]).collect()
    }

    /// True when some 8-neighbour pair lies inside the mask.
    pub fn has_pair(&self) -> bool {
        let (w, h) = (self.width as i64, self.height as i64);
        let m = |r: i64, c: i64| r >= 0 && c >= 0 && r < h && c < w && self.mask[(r * w + c) as usize];
        (0..h).any(|r| (0..w).any(|c| m(r, c) && [(0, 1), (1, 1), (1, 0), (1, -1)].iter().any(|&(a, b)| m(r + a, c + b))))
    }
}

/// A random ROI of at most `max_side` x `max_side` pixels with at least one
/// in-mask neighbour pair. Intensities mix smooth structure, noise and
/// occasional repeated values so ties and multi-pixel zones occur.
pub fn random_roi(seed: u64, max_side: usize) -> RoiFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let width = rng.random_range(2..=max_side);
        let height = rng.random_range(2..=max_side);
        let density = rng.random_range(0.3..1.0);
        let scale = [5.0, 40.0, 200.0][rng.random_range(0..3)];
        let integer = rng.random_bool(0.5);
        let values: Vec<f64> = (0..width * height)
            .map(|i| {
                let (c, r) = ((i % width) as f64, (i / width) as f64);
                let v = 100.0 + scale * ((0.4 * c).sin() + (0.3 * r).cos()) + scale * rng.random_range(-1.0..1.0);
                if integer { v.round() } else { v }
            })
            .collect();
        let mask: Vec<bool> = (0..width * height).map(|_| rng.random_bool(density)).collect();
        let f = RoiFixture {
            width,
            height,
            values,
            mask,
        };
        if f.has_pair() {
            return f;
        }
    }
}
