//! FLATGRID v1: one ASCII header line
//! `FLATGRID v1 <width> <height> <spacing_x> <spacing_y> <dtype>\n`
//! followed by the raw little-endian payload (`f64` for images, `u8` for labels).

use std::path::Path;

use super::{write_atomic, GridGeometry, ImageGrid, LabelGrid};
use crate::error::{Error, Result};

pub(crate) const MAGIC: &str = "FLATGRID";
const VERSION: &str = "v1";

/// Decoded payload of a FLATGRID file.
#[derive(Debug, Clone, PartialEq)]
pub enum FlatPayload {
    F64(Vec<f64>),
    U8(Vec<u8>),
}

pub fn read_flatgrid(bytes: &[u8], path: &Path) -> Result<(GridGeometry, FlatPayload)> {
    let malformed = |reason: String| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason,
    };
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| malformed("missing header terminator".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| malformed("header is not ASCII".into()))?;
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 7 || fields[0] != MAGIC || fields[1] != VERSION {
        return Err(malformed(format!("unrecognised header line {header:?}")));
    }
    let width: usize = fields[2]
        .parse()
        .map_err(|_| malformed(format!("bad width {:?}", fields[2])))?;
    let height: usize = fields[3]
        .parse()
        .map_err(|_| malformed(format!("bad height {:?}", fields[3])))?;
    let spacing_x: f64 = fields[4]
        .parse()
        .map_err(|_| malformed(format!("bad spacing_x {:?}", fields[4])))?;
    let spacing_y: f64 = fields[5]
        .parse()
        .map_err(|_| malformed(format!("bad spacing_y {:?}", fields[5])))?;
    let geometry = GridGeometry::new(width, height, spacing_x, spacing_y)
        .map_err(|e| malformed(e.to_string()))?;
    let payload = &bytes[newline + 1..];
    let n = geometry.len();
    let decoded = match fields[6] {
        "f64" => {
            if payload.len() != n * 8 {
                return Err(malformed(format!(
                    "f64 payload is {} bytes, expected {}",
                    payload.len(),
                    n * 8
                )));
            }
            FlatPayload::F64(
                payload
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                    .collect(),
            )
        }
        "u8" => {
            if payload.len() != n {
                return Err(malformed(format!(
                    "u8 payload is {} bytes, expected {n}",
                    payload.len()
                )));
            }
            FlatPayload::U8(payload.to_vec())
        }
        other => return Err(malformed(format!("unknown dtype {other:?}"))),
    };
    Ok((geometry, decoded))
}

fn header(geometry: &GridGeometry, dtype: &str) -> String {
    format!(
        "{MAGIC} {VERSION} {} {} {:?} {:?} {dtype}\n",
        geometry.width, geometry.height, geometry.spacing_x, geometry.spacing_y
    )
}

pub fn write_flatgrid(geometry: &GridGeometry, payload: &FlatPayload) -> Vec<u8> {
    match payload {
        FlatPayload::F64(values) => {
            let mut out = header(geometry, "f64").into_bytes();
            out.reserve(values.len() * 8);
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out
        }
        FlatPayload::U8(values) => {
            let mut out = header(geometry, "u8").into_bytes();
            out.extend_from_slice(values);
            out
        }
    }
}

/// Rasters that can be written as FLATGRID.
pub trait FlatGridEncode {
    fn to_flatgrid(&self) -> Vec<u8>;
}

impl FlatGridEncode for ImageGrid {
    fn to_flatgrid(&self) -> Vec<u8> {
        write_flatgrid(self.geometry(), &FlatPayload::F64(self.data().to_vec()))
    }
}

impl FlatGridEncode for LabelGrid {
    fn to_flatgrid(&self) -> Vec<u8> {
        write_flatgrid(self.geometry(), &FlatPayload::U8(self.data().to_vec()))
    }
}

/// Writes `grid` as FLATGRID v1 (atomically).
pub fn save_grid<G: FlatGridEncode + ?Sized>(grid: &G, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, &grid.to_flatgrid())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_pixel_payload_is_eight_bytes() {
        let g = GridGeometry::unit(1, 1).unwrap();
        let img = ImageGrid::new(g, vec![5.0]).unwrap();
        let bytes = img.to_flatgrid();
        let header_len = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
        assert_eq!(&bytes[..header_len], b"FLATGRID v1 1 1 1.0 1.0 f64\n");
        assert_eq!(bytes.len() - header_len, 8);
        assert_eq!(&bytes[header_len..], &5.0f64.to_le_bytes());
    }

    #[test]
    fn zeros_decode() {
        let mut bytes = b"FLATGRID v1 4 4 1.0 1.0 f64\n".to_vec();
        bytes.extend(std::iter::repeat_n(0u8, 16 * 8));
        let (g, payload) = read_flatgrid(&bytes, Path::new("x")).unwrap();
        assert_eq!((g.width, g.height), (4, 4));
        assert_eq!(payload, FlatPayload::F64(vec![0.0; 16]));
    }

    #[test]
    fn malformed_headers() {
        let p = Path::new("x");
        assert!(read_flatgrid(b"FLATGRID v2 1 1 1 1 f64\n\0\0\0\0\0\0\0\0", p).is_err());
        assert!(read_flatgrid(b"FLATGRID v1 1 1 1 1 f32\n\0\0\0\0", p).is_err());
        assert!(read_flatgrid(b"FLATGRID v1 2 1 1 1 u8\n\0", p).is_err());
        assert!(read_flatgrid(b"FLATGRID v1 0 1 1 1 u8\n", p).is_err());
        assert!(read_flatgrid(b"FLATGRID v1 1 1 1 1 u8", p).is_err());
    }
}
