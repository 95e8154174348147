use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use radiosynth_core::grid::write_atomic;
use radiosynth_core::{GridGeometry, ImageGrid};
use serde::{Deserialize, Serialize};

pub const MANIFEST_HEADER: [&str; 3] = ["subject", "image_path", "labels_path"];

/// A comma-separated pair such as `64.5,70` (x then y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair(pub f64, pub f64);

impl FromStr for Pair {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [a, b] = parts.as_slice() else {
            return Err(format!("expected two comma-separated numbers, got {s:?}"));
        };
        let parse = |t: &str| t.parse::<f64>().ok().filter(|v| v.is_finite());
        match (parse(a), parse(b)) {
            (Some(a), Some(b)) => Ok(Pair(a, b)),
            _ => Err(format!("not a pair of finite numbers: {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub subject: String,
    pub image: PathBuf,
    pub labels: PathBuf,
}

/// Reads a manifest; relative paths are taken relative to its directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening manifest {}", path.display()))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers().with_context(|| format!("reading manifest {}", path.display()))?.clone();
    let pos = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .with_context(|| format!("manifest {} lacks a {name:?} column", path.display()))
    };
    let (ps, pi, pl) = (pos(MANIFEST_HEADER[0])?, pos(MANIFEST_HEADER[1])?, pos(MANIFEST_HEADER[2])?);
    let base = path.parent().unwrap_or(Path::new(""));
    let mut rows = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("reading manifest {}", path.display()))?;
        let subject = record[ps].trim().to_string();
        if subject.is_empty() {
            bail!("manifest {} has a row without subject id", path.display());
        }
        if !seen.insert(subject.clone()) {
            bail!("manifest {} repeats subject {subject}", path.display());
        }
        rows.push(ManifestRow {
            subject,
            image: base.join(record[pi].trim()),
            labels: base.join(record[pl].trim()),
        });
    }
    Ok(rows)
}

/// Writes a manifest whose paths are file names inside its own directory.
pub fn write_manifest(path: &Path, rows: &[(String, String, String)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(MANIFEST_HEADER)?;
    for (s, i, l) in rows {
        w.write_record([s, i, l])?;
    }
    write_atomic(path, &w.into_inner()?)?;
    Ok(())
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(w.into_inner()?)
}

/// Per-job seed from the run seed and a stable job tag (FNV-1a, then a
/// splitmix64 finalizer), so seeds do not depend on scheduling order.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = base ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// Center of the field of view in mm.
pub fn fov_center(g: &GridGeometry) -> (f64, f64) {
    ((g.width - 1) as f64 * g.spacing_x / 2.0, (g.height - 1) as f64 * g.spacing_y / 2.0)
}

/// Min/max display window, widened for constant images.
pub fn auto_window(image: &ImageGrid) -> (f64, f64) {
    let (lo, hi) = image
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo < hi {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
