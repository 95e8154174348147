use std::path::Path;

use super::{write_atomic, ImageGrid};
use crate::error::{Error, Result};

/// Maps intensities to bytes with `round(255 * clamp((x - lo) / (hi - lo), 0, 1))`.
pub fn window_bytes(image: &ImageGrid, lo: f64, hi: f64) -> Result<Vec<u8>> {
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::InvalidArgument(format!("display window requires lo < hi, got ({lo}, {hi})")));
    }
    Ok(image
        .data()
        .iter()
        .map(|&x| (255.0 * ((x - lo) / (hi - lo)).clamp(0.0, 1.0)).round() as u8)
        .collect())
}

/// Encodes raw 8-bit pixels as binary PGM (P5).
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Writes `image` as an 8-bit binary PGM using the display window `(lo, hi)`.
pub fn save_pgm(image: &ImageGrid, path: impl AsRef<Path>, window: (f64, f64)) -> Result<()> {
    let pixels = window_bytes(image, window.0, window.1)?;
    let g = image.geometry();
    write_atomic(path, &encode_pgm(g.width, g.height, &pixels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;

    #[test]
    fn constant_images_hit_the_window_ends() {
        let g = GridGeometry::unit(3, 2).unwrap();
        let lo = ImageGrid::filled(g, -10.0).unwrap();
        let hi = ImageGrid::filled(g, 30.0).unwrap();
        assert!(window_bytes(&lo, -10.0, 30.0).unwrap().iter().all(|&b| b == 0));
        assert!(window_bytes(&hi, -10.0, 30.0).unwrap().iter().all(|&b| b == 255));
    }

    #[test]
    fn ramp_is_monotone() {
        let g = GridGeometry::unit(256, 1).unwrap();
        let ramp = ImageGrid::from_fn(g, |c, _| 10.0 + 90.0 * c as f64 / 255.0).unwrap();
        let bytes = window_bytes(&ramp, 10.0, 100.0).unwrap();
        assert!(bytes.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!((bytes[0], bytes[255]), (0, 255));
    }

    #[test]
    fn rejects_inverted_window() {
        let g = GridGeometry::unit(1, 1).unwrap();
        let img = ImageGrid::filled(g, 0.0).unwrap();
        assert!(window_bytes(&img, 1.0, 1.0).is_err());
        assert!(window_bytes(&img, 2.0, 1.0).is_err());
    }

    #[test]
    fn header_layout() {
        assert_eq!(encode_pgm(2, 1, &[0, 255]), b"P5\n2 1\n255\n\x00\xff".to_vec());
    }
}
