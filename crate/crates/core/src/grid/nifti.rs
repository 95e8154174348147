//! Minimal read-only NIfTI-1 support: 348-byte header, single-file (`n+1`)
//! layout, optional gzip wrapping. No orientation handling; a 3D volume is
//! reduced to one axial plane chosen by the caller.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::GridGeometry;
use crate::error::{io_err, Error, Result};

const HEADER_SIZE: usize = 348;

#[derive(Debug, Clone, PartialEq)]
pub struct NiftiHeader {
    pub little_endian: bool,
    pub dim: [i16; 8],
    pub datatype: i16,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
}

impl NiftiHeader {
    pub fn parse(bytes: &[u8], path: &Path) -> Result<Self> {
        let malformed = |reason: &str| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        if bytes.len() < HEADER_SIZE {
            return Err(malformed("file shorter than a NIfTI-1 header"));
        }
        let little_endian = match (
            i32::from_le_bytes(bytes[0..4].try_into().unwrap()),
            i32::from_be_bytes(bytes[0..4].try_into().unwrap()),
        ) {
            (348, _) => true,
            (_, 348) => false,
            _ => return Err(malformed("sizeof_hdr is not 348")),
        };
        if &bytes[344..347] != b"n+1" {
            return Err(malformed("only single-file NIfTI-1 (magic n+1) is supported"));
        }
        let i16_at = |off: usize| {
            let raw: [u8; 2] = bytes[off..off + 2].try_into().unwrap();
            if little_endian {
                i16::from_le_bytes(raw)
            } else {
                i16::from_be_bytes(raw)
            }
        };
        let f32_at = |off: usize| {
            let raw: [u8; 4] = bytes[off..off + 4].try_into().unwrap();
            if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            }
        };
        let mut dim = [0i16; 8];
        for (k, d) in dim.iter_mut().enumerate() {
            *d = i16_at(40 + 2 * k);
        }
        let mut pixdim = [0f32; 8];
        for (k, p) in pixdim.iter_mut().enumerate() {
            *p = f32_at(76 + 4 * k);
        }
        Ok(Self {
            little_endian,
            dim,
            datatype: i16_at(70),
            bitpix: i16_at(72),
            pixdim,
            vox_offset: f32_at(108),
            scl_slope: f32_at(112),
            scl_inter: f32_at(116),
        })
    }

    fn bytes_per_voxel(&self) -> Result<usize> {
        match self.datatype {
            2 | 256 => Ok(1),
            4 | 512 => Ok(2),
            16 => Ok(4),
            64 => Ok(8),
            other => Err(Error::UnsupportedDatatype(other)),
        }
    }
}

fn decompress_if_gzip(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut out)
            .map_err(io_err(path))?;
        Ok(out)
    } else {
        Ok(bytes.to_vec())
    }
}

/// Decodes one 2D plane of a NIfTI-1 file into row-major `f64` values.
///
/// 2D images (`dim[3] <= 1`) ignore `slice` unless it is non-zero; volumes
/// require it.
pub fn read_nifti_slice(
    raw: &[u8],
    path: &Path,
    slice: Option<usize>,
) -> Result<(GridGeometry, Vec<f64>)> {
    let bytes = decompress_if_gzip(raw, path)?;
    let header = NiftiHeader::parse(&bytes, path)?;
    let malformed = |reason: String| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason,
    };
    let ndim = header.dim[0];
    if !(2..=7).contains(&ndim) {
        return Err(malformed(format!("dim[0] = {ndim} unsupported")));
    }
    let nx = header.dim[1].max(0) as usize;
    let ny = header.dim[2].max(0) as usize;
    let nz = if ndim >= 3 { header.dim[3].max(1) as usize } else { 1 };
    if ndim > 3 && header.dim[4..=(ndim as usize)].iter().any(|&d| d > 1) {
        return Err(malformed("4D+ volumes are not supported".into()));
    }
    let z = match (nz, slice) {
        (1, None) | (1, Some(0)) => 0,
        (_, Some(z)) if z < nz => z,
        (_, Some(z)) => return Err(malformed(format!("slice {z} out of range 0..{nz}"))),
        (_, None) => {
            return Err(Error::InvalidArgument(format!(
                "{} is a 3D volume with {nz} slices; a slice index is required",
                path.display()
            )))
        }
    };
    let bpv = header.bytes_per_voxel()?;
    let spacing_x = f64::from(header.pixdim[1].abs());
    let spacing_y = f64::from(header.pixdim[2].abs());
    let spacing_x = if spacing_x > 0.0 { spacing_x } else { 1.0 };
    let spacing_y = if spacing_y > 0.0 { spacing_y } else { 1.0 };
    let geometry =
        GridGeometry::new(nx, ny, spacing_x, spacing_y).map_err(|e| malformed(e.to_string()))?;

    let offset = (header.vox_offset.max(HEADER_SIZE as f32) as usize).max(352);
    let plane = nx * ny;
    let start = offset + z * plane * bpv;
    let end = start + plane * bpv;
    if bytes.len() < end {
        return Err(malformed(format!(
            "voxel data truncated: need {end} bytes, file has {}",
            bytes.len()
        )));
    }
    let le = header.little_endian;
    let data = &bytes[start..end];
    let mut values: Vec<f64> = match header.datatype {
        2 => data.iter().map(|&b| f64::from(b)).collect(),
        256 => data.iter().map(|&b| f64::from(b as i8)).collect(),
        4 => data
            .chunks_exact(2)
            .map(|c| {
                let raw = [c[0], c[1]];
                f64::from(if le { i16::from_le_bytes(raw) } else { i16::from_be_bytes(raw) })
            })
            .collect(),
        512 => data
            .chunks_exact(2)
            .map(|c| {
                let raw = [c[0], c[1]];
                f64::from(if le { u16::from_le_bytes(raw) } else { u16::from_be_bytes(raw) })
            })
            .collect(),
        16 => data
            .chunks_exact(4)
            .map(|c| {
                let raw: [u8; 4] = c.try_into().unwrap();
                f64::from(if le { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) })
            })
            .collect(),
        64 => data
            .chunks_exact(8)
            .map(|c| {
                let raw: [u8; 8] = c.try_into().unwrap();
                if le {
                    f64::from_le_bytes(raw)
                } else {
                    f64::from_be_bytes(raw)
                }
            })
            .collect(),
        other => return Err(Error::UnsupportedDatatype(other)),
    };
    let slope = f64::from(header.scl_slope);
    if slope != 0.0 && slope.is_finite() && (slope != 1.0 || header.scl_inter != 0.0) {
        let inter = f64::from(header.scl_inter);
        for v in &mut values {
            *v = *v * slope + inter;
        }
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteIntensity { index });
    }
    Ok((geometry, values))
}
