//! Per-subject feature vectors (67 features per ROI), cohort matrices,
//! standardization, and the features CSV + JSON sidecar format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::grid::{write_atomic, GridGeometry, ImageGrid, LabelGrid};
use crate::intensity::{compute_first_order, DiscretizationConfig, FirstOrderFeatures};
use crate::roi::{mask_from_labels, BinaryMask, RoiSpec};
use crate::shape::{compute_shape, ShapeFeatures};
use crate::texture::{GlcmFeatures, GlcmSet, GlszmFeatures, LevelMap, SizeZoneMatrix};
use crate::texture::{glcm_features, glszm_features};

/// Features per ROI.
pub const FEATURES_PER_ROI: usize = 67;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Shape,
    #[serde(rename = "firstorder")]
    FirstOrder,
    Glcm,
    Glszm,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Shape, Family::FirstOrder, Family::Glcm, Family::Glszm];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Shape => "shape",
            Family::FirstOrder => "firstorder",
            Family::Glcm => "glcm",
            Family::Glszm => "glszm",
        }
    }

    /// Column heading used in similarity tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Family::Shape => "Shape",
            Family::FirstOrder => "Histogram",
            Family::Glcm => "GLCM",
            Family::Glszm => "GLSZM",
        }
    }

    /// Feature names of the family in canonical (alphabetical) order.
    pub fn feature_names(self) -> &'static [&'static str] {
        match self {
            Family::Shape => &ShapeFeatures::NAMES,
            Family::FirstOrder => &FirstOrderFeatures::NAMES,
            Family::Glcm => &GlcmFeatures::NAMES,
            Family::Glszm => &GlszmFeatures::NAMES,
        }
    }

    /// The family that defines `feature`, if any.
    pub fn of_feature(feature: &str) -> Option<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.feature_names().contains(&feature))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Schema(format!("unknown feature family {s:?}")))
    }
}

/// Which families to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilySet {
    pub shape: bool,
    pub first_order: bool,
    pub glcm: bool,
    pub glszm: bool,
}

impl FamilySet {
    pub const ALL: FamilySet = FamilySet {
        shape: true,
        first_order: true,
        glcm: true,
        glszm: true,
    };
    pub const NONE: FamilySet = FamilySet {
        shape: false,
        first_order: false,
        glcm: false,
        glszm: false,
    };

    pub fn insert(&mut self, family: Family) {
        match family {
            Family::Shape => self.shape = true,
            Family::FirstOrder => self.first_order = true,
            Family::Glcm => self.glcm = true,
            Family::Glszm => self.glszm = true,
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == FamilySet::NONE
    }
}

/// Features of one ROI; families not requested stay `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoiFeatures {
    pub shape: Option<ShapeFeatures>,
    pub first_order: Option<FirstOrderFeatures>,
    pub glcm: Option<GlcmFeatures>,
    pub glszm: Option<GlszmFeatures>,
}

impl RoiFeatures {
    /// Computes the requested families from explicit masks.
    pub fn compute(
        image: &ImageGrid,
        intensity_mask: &BinaryMask,
        shape_mask: &BinaryMask,
        disc: &DiscretizationConfig,
        families: FamilySet,
    ) -> Result<Self> {
        if intensity_mask.is_empty() {
            return Err(Error::EmptyMask("ROI has no pixels".into()));
        }
        image.geometry().ensure_same(intensity_mask.geometry())?;
        image.geometry().ensure_same(shape_mask.geometry())?;
        // Work on the joint bounding box; every family depends only on the
        // in-mask pattern, so this is exact and much cheaper on large grids.
        let (c0, r0, c1, r1) = match shape_mask.bounding_box() {
            Some((a, b, c, d)) => {
                let (e, f, g, h) = intensity_mask.bounding_box().expect("non-empty");
                (a.min(e), b.min(f), c.max(g), d.max(h))
            }
            None => intensity_mask.bounding_box().expect("non-empty"),
        };
        let (w, h) = (c1 - c0 + 1, r1 - r0 + 1);
        let image = &image.crop(c0, r0, w, h)?;
        let intensity_mask = &intensity_mask.crop(c0, r0, w, h)?;
        let shape_mask = &shape_mask.crop(c0, r0, w, h)?;
        let mut out = RoiFeatures::default();
        if families.shape {
            out.shape = Some(compute_shape(shape_mask)?);
        }
        if families.first_order {
            let values: Vec<f64> = intensity_mask.indices().map(|i| image.data()[i]).collect();
            out.first_order = Some(compute_first_order(&values, image.geometry().pixel_area(), disc)?);
        }
        if families.glcm || families.glszm {
            let levels = LevelMap::new(image, intensity_mask, disc)?;
            if families.glcm {
                out.glcm = Some(glcm_features(&GlcmSet::from_levels(&levels)?));
            }
            if families.glszm {
                out.glszm = Some(glszm_features(&SizeZoneMatrix::from_levels(
                    &levels,
                    crate::roi::Connectivity::Eight,
                )));
            }
        }
        Ok(out)
    }

    pub fn get(&self, feature: &str) -> Option<f64> {
        let find = |pairs: &[(&'static str, f64)]| pairs.iter().find(|(n, _)| *n == feature).map(|p| p.1);
        match Family::of_feature(feature)? {
            Family::Shape => self.shape.and_then(|s| find(&s.named())),
            Family::FirstOrder => self.first_order.and_then(|s| find(&s.named())),
            Family::Glcm => self.glcm.and_then(|s| find(&s.named())),
            Family::Glszm => self.glszm.and_then(|s| find(&s.named())),
        }
    }

    /// All computed `(family, name, value)` triples in canonical order.
    pub fn entries(&self) -> Vec<(Family, &'static str, f64)> {
        let mut out = Vec::with_capacity(FEATURES_PER_ROI);
        if let Some(s) = self.shape {
            out.extend(s.named().into_iter().map(|(n, v)| (Family::Shape, n, v)));
        }
        if let Some(s) = self.first_order {
            out.extend(s.named().into_iter().map(|(n, v)| (Family::FirstOrder, n, v)));
        }
        if let Some(s) = self.glcm {
            out.extend(s.named().into_iter().map(|(n, v)| (Family::Glcm, n, v)));
        }
        if let Some(s) = self.glszm {
            out.extend(s.named().into_iter().map(|(n, v)| (Family::Glszm, n, v)));
        }
        out
    }
}

/// Computes the requested families for `roi` from a label raster.
pub fn roi_features(
    image: &ImageGrid,
    labels: &LabelGrid,
    roi: &RoiSpec,
    disc: &DiscretizationConfig,
    families: FamilySet,
) -> Result<RoiFeatures> {
    image.geometry().ensure_same(labels.geometry())?;
    let mask = mask_from_labels(labels, roi);
    let shape_mask = if roi.shape_labels.is_some() {
        mask_from_labels(labels, &roi.shape_roi())
    } else {
        mask.clone()
    };
    RoiFeatures::compute(image, &mask, &shape_mask, disc, families)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub roi: String,
    pub family: Family,
    pub feature: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsentRoi {
    pub roi: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMetadata {
    pub source: String,
    pub discretization: DiscretizationConfig,
    pub geometry: GridGeometry,
    pub rois: Vec<RoiSpec>,
    /// Pixel count `N_p` of each present ROI's intensity mask and shape mask.
    pub pixel_counts: BTreeMap<String, (usize, usize)>,
    #[serde(default)]
    pub absent: Vec<AbsentRoi>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub glcm_feature_set: String,
    pub glszm_connectivity: u8,
}

impl FeatureMetadata {
    pub fn flagged(&self) -> bool {
        !self.absent.is_empty()
    }
}

/// The named, canonically ordered features of one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entries: Vec<FeatureEntry>,
    pub metadata: FeatureMetadata,
}

impl FeatureVector {
    pub fn get(&self, roi: &str, feature: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.roi == roi && e.feature == feature)
            .map(|e| e.value)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.metadata.source = source.into();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.metadata.seed = Some(seed);
        self
    }

    pub fn column_keys(&self) -> Vec<ColumnKey> {
        self.entries
            .iter()
            .map(|e| ColumnKey {
                roi: e.roi.clone(),
                family: e.family,
                feature: e.feature.clone(),
            })
            .collect()
    }
}

pub const GLCM_FEATURE_SET: &str =
    "24 default-enabled GLCM features of the reference radiomics toolkit, averaged over 4 offsets";

/// Extracts all 67 features for every configured ROI. ROIs that are empty, or
/// whose features cannot be computed, are recorded as absent instead of
/// failing the subject.
pub fn extract_features(
    image: &ImageGrid,
    labels: &LabelGrid,
    rois: &[RoiSpec],
    disc: &DiscretizationConfig,
) -> Result<FeatureVector> {
    image.geometry().ensure_same(labels.geometry())?;
    disc.validate()?;
    for roi in rois {
        roi.validate()?;
    }
    let mut entries = Vec::with_capacity(rois.len() * FEATURES_PER_ROI);
    let mut absent = Vec::new();
    let mut pixel_counts = BTreeMap::new();
    for roi in rois {
        let mask = mask_from_labels(labels, roi);
        if mask.is_empty() {
            absent.push(AbsentRoi {
                roi: roi.name.clone(),
                reason: "empty ROI".into(),
            });
            continue;
        }
        let shape_mask = mask_from_labels(labels, &roi.shape_roi());
        match RoiFeatures::compute(image, &mask, &shape_mask, disc, FamilySet::ALL) {
            Ok(features) => {
                pixel_counts.insert(roi.name.clone(), (mask.pixel_count(), shape_mask.pixel_count()));
                entries.extend(features.entries().into_iter().map(|(family, name, value)| FeatureEntry {
                    roi: roi.name.clone(),
                    family,
                    feature: name.to_string(),
                    value,
                }));
            }
            Err(e) => absent.push(AbsentRoi {
                roi: roi.name.clone(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(FeatureVector {
        entries,
        metadata: FeatureMetadata {
            source: String::new(),
            discretization: *disc,
            geometry: *image.geometry(),
            rois: rois.to_vec(),
            pixel_counts,
            absent,
            seed: None,
            glcm_feature_set: GLCM_FEATURE_SET.into(),
            glszm_connectivity: 8,
        },
    })
}

/// One cohort column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColumnKey {
    pub roi: String,
    pub family: Family,
    pub feature: String,
}

/// The canonical schema for a list of ROI names.
pub fn canonical_columns(roi_names: &[&str]) -> Vec<ColumnKey> {
    roi_names
        .iter()
        .flat_map(|roi| {
            Family::ALL.into_iter().flat_map(move |family| {
                family.feature_names().iter().map(move |f| ColumnKey {
                    roi: roi.to_string(),
                    family,
                    feature: f.to_string(),
                })
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnTransform {
    pub mean: f64,
    pub std: f64,
    /// Zero population variance: the column standardizes to all zeros.
    pub zero_variance: bool,
}

impl ColumnTransform {
    pub fn apply(&self, x: f64) -> f64 {
        if self.zero_variance {
            0.0
        } else {
            (x - self.mean) / self.std
        }
    }

    pub fn invert(&self, z: f64) -> f64 {
        if self.zero_variance {
            self.mean
        } else {
            z * self.std + self.mean
        }
    }
}

/// How to treat subjects with absent ROIs when assembling a cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    #[default]
    Drop,
    /// Replace missing values by the column mean of the subjects that have them.
    Impute,
}

/// Subjects by features, all rows sharing one column schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortMatrix {
    pub subjects: Vec<String>,
    pub columns: Vec<ColumnKey>,
    /// Row-major, `subjects.len() x columns.len()`.
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Vec<ColumnTransform>>,
}

impl CohortMatrix {
    pub fn new(subjects: Vec<String>, columns: Vec<ColumnKey>, values: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self {
            subjects,
            columns,
            values,
            standardization: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.subjects.len() {
            return Err(Error::Schema(format!(
                "{} rows for {} subjects",
                self.values.len(),
                self.subjects.len()
            )));
        }
        let unique: BTreeSet<&String> = self.subjects.iter().collect();
        if unique.len() != self.subjects.len() {
            return Err(Error::Schema("duplicate subject id".into()));
        }
        let cols: BTreeSet<&ColumnKey> = self.columns.iter().collect();
        if cols.len() != self.columns.len() {
            return Err(Error::Schema("duplicate column".into()));
        }
        for (s, row) in self.subjects.iter().zip(&self.values) {
            if row.len() != self.columns.len() {
                return Err(Error::Schema(format!("subject {s} has {} values", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Schema(format!("subject {s} has a non-finite value")));
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.subjects.len()
    }

    pub fn column_index(&self, key: &ColumnKey) -> Option<usize> {
        self.columns.iter().position(|c| c == key)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    /// Assembles a cohort from per-subject vectors, sorted by subject id. The
    /// schema is the canonical schema of the ROI names that occur. Returns
    /// the cohort and the ids of dropped subjects.
    pub fn from_vectors(
        vectors: &[(String, FeatureVector)],
        policy: MissingPolicy,
    ) -> Result<(CohortMatrix, Vec<String>)> {
        let mut sorted: Vec<&(String, FeatureVector)> = vectors.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let mut roi_order: Vec<String> = Vec::new();
        for (_, v) in &sorted {
            for r in &v.metadata.rois {
                if !roi_order.contains(&r.name) {
                    roi_order.push(r.name.clone());
                }
            }
        }
        let names: Vec<&str> = roi_order.iter().map(String::as_str).collect();
        let columns = canonical_columns(&names);
        let index: BTreeMap<(&str, &str), usize> = columns
            .iter()
            .enumerate()
            .map(|(j, c)| ((c.roi.as_str(), c.feature.as_str()), j))
            .collect();

        let mut rows: Vec<(String, Vec<Option<f64>>)> = Vec::new();
        let mut dropped = Vec::new();
        for (subject, v) in sorted {
            let mut row = vec![None; columns.len()];
            for e in &v.entries {
                if let Some(&j) = index.get(&(e.roi.as_str(), e.feature.as_str())) {
                    row[j] = Some(e.value);
                }
            }
            let complete = row.iter().all(Option::is_some);
            if !complete && policy == MissingPolicy::Drop {
                dropped.push(subject.clone());
                continue;
            }
            rows.push((subject.clone(), row));
        }
        let mut means = vec![0.0; columns.len()];
        if policy == MissingPolicy::Impute {
            for (j, m) in means.iter_mut().enumerate() {
                let present: Vec<f64> = rows.iter().filter_map(|r| r.1[j]).collect();
                if present.is_empty() {
                    return Err(Error::Schema(format!(
                        "column {}/{} has no values to impute from",
                        columns[j].roi, columns[j].feature
                    )));
                }
                *m = present.iter().sum::<f64>() / present.len() as f64;
            }
        }
        let subjects = rows.iter().map(|r| r.0.clone()).collect();
        let values = rows
            .into_iter()
            .map(|(_, row)| row.into_iter().enumerate().map(|(j, v)| v.unwrap_or(means[j])).collect())
            .collect();
        Ok((CohortMatrix::new(subjects, columns, values)?, dropped))
    }

    /// Population mean/std of every column.
    pub fn column_stats(&self) -> Vec<ColumnTransform> {
        let n = self.n_rows() as f64;
        (0..self.columns.len())
            .map(|j| {
                let col = self.column(j);
                let mean = col.iter().sum::<f64>() / n;
                let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                let std = var.sqrt();
                let zero_variance = std.is_nan() || std <= 0.0 || col.iter().all(|&x| x == col[0]);
                ColumnTransform {
                    mean,
                    std,
                    zero_variance,
                }
            })
            .collect()
    }

    /// Applies explicit per-column transforms (e.g. another cohort's stats).
    pub fn standardize_with(&self, transforms: &[ColumnTransform]) -> Result<CohortMatrix> {
        if transforms.len() != self.columns.len() {
            return Err(Error::Schema(format!(
                "{} transforms for {} columns",
                transforms.len(),
                self.columns.len()
            )));
        }
        let values = self
            .values
            .iter()
            .map(|row| row.iter().zip(transforms).map(|(&x, t)| t.apply(x)).collect())
            .collect();
        Ok(CohortMatrix {
            subjects: self.subjects.clone(),
            columns: self.columns.clone(),
            values,
            standardization: Some(transforms.to_vec()),
        })
    }

    /// Per-column z-scores with population std; constant columns become zeros
    /// and are flagged in the recorded transform.
    pub fn standardize(&self) -> Result<CohortMatrix> {
        if self.n_rows() < 2 {
            return Err(Error::Degenerate(format!(
                "standardization needs at least 2 subjects, got {}",
                self.n_rows()
            )));
        }
        self.standardize_with(&self.column_stats())
    }

    /// Restricts to the rows of `subjects`, in that order.
    pub fn select_subjects(&self, subjects: &[String]) -> Result<CohortMatrix> {
        let rows = subjects
            .iter()
            .map(|s| {
                self.subjects
                    .iter()
                    .position(|x| x == s)
                    .map(|i| self.values[i].clone())
                    .ok_or_else(|| Error::Schema(format!("subject {s} missing")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CohortMatrix {
            subjects: subjects.to_vec(),
            columns: self.columns.clone(),
            values: rows,
            standardization: self.standardization.clone(),
        })
    }
}

/// Free function form of [`CohortMatrix::standardize`].
pub fn standardize(cohort: &CohortMatrix) -> Result<CohortMatrix> {
    cohort.standardize()
}

/// Contents of the JSON sidecar written next to a features CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSidecar {
    pub format: String,
    pub columns: Vec<ColumnKey>,
    pub subjects: Vec<String>,
    #[serde(default)]
    pub subject_metadata: BTreeMap<String, FeatureMetadata>,
    #[serde(default)]
    pub dropped: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Vec<ColumnTransform>>,
}

pub const FEATURES_FORMAT: &str = "radiosynth-features v1";
pub const FEATURES_HEADER: [&str; 5] = ["subject", "roi", "family", "feature", "value"];

/// `features.csv` -> `features.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Formats a float so that parsing it back yields the identical value.
pub fn format_value(v: f64) -> String {
    format!("{v:?}")
}

pub fn features_csv_bytes(cohort: &CohortMatrix) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FEATURES_HEADER)?;
    for (subject, row) in cohort.subjects.iter().zip(&cohort.values) {
        for (c, v) in cohort.columns.iter().zip(row) {
            w.write_record([
                subject.as_str(),
                c.roi.as_str(),
                c.family.as_str(),
                c.feature.as_str(),
                &format_value(*v),
            ])?;
        }
    }
    w.into_inner().map_err(|e| Error::Io {
        path: PathBuf::from("<memory>"),
        source: e.into_error(),
    })
}

/// Writes the long-format CSV and its sidecar, both atomically.
pub fn write_features(
    path: impl AsRef<Path>,
    cohort: &CohortMatrix,
    subject_metadata: BTreeMap<String, FeatureMetadata>,
    dropped: Vec<String>,
) -> Result<()> {
    let path = path.as_ref();
    cohort.validate()?;
    write_atomic(path, &features_csv_bytes(cohort)?)?;
    let sidecar = CohortSidecar {
        format: FEATURES_FORMAT.into(),
        columns: cohort.columns.clone(),
        subjects: cohort.subjects.clone(),
        subject_metadata,
        dropped,
        standardization: cohort.standardization.clone(),
    };
    let mut json = serde_json::to_vec_pretty(&sidecar)?;
    json.push(b'\n');
    write_atomic(sidecar_path(path), &json)
}

/// Reads a features CSV (columns located by header name) and its sidecar.
pub fn read_features(path: impl AsRef<Path>) -> Result<(CohortMatrix, CohortSidecar)> {
    let path = path.as_ref();
    let side_path = sidecar_path(path);
    let side_bytes = std::fs::read(&side_path).map_err(io_err(&side_path))?;
    let sidecar: CohortSidecar = serde_json::from_slice(&side_bytes)?;
    if sidecar.format != FEATURES_FORMAT {
        return Err(Error::Schema(format!("unknown features format {:?}", sidecar.format)));
    }
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let pos = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("features CSV lacks a {name:?} column")))
    };
    let (ps, pr, pf, pn, pv) = (pos("subject")?, pos("roi")?, pos("family")?, pos("feature")?, pos("value")?);

    let col_index: BTreeMap<(&str, &str), usize> = sidecar
        .columns
        .iter()
        .enumerate()
        .map(|(j, c)| ((c.roi.as_str(), c.feature.as_str()), j))
        .collect();
    let row_index: BTreeMap<&str, usize> = sidecar
        .subjects
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut values: Vec<Vec<Option<f64>>> = vec![vec![None; sidecar.columns.len()]; sidecar.subjects.len()];
    for record in reader.records() {
        let record = record?;
        let subject = &record[ps];
        let (roi, family, feature) = (&record[pr], &record[pf], &record[pn]);
        let i = *row_index
            .get(subject)
            .ok_or_else(|| Error::Schema(format!("subject {subject:?} not declared in sidecar")))?;
        let j = *col_index
            .get(&(roi, feature))
            .ok_or_else(|| Error::Schema(format!("column {roi}/{feature} not declared in sidecar")))?;
        if sidecar.columns[j].family.as_str() != family {
            return Err(Error::Schema(format!("{roi}/{feature} listed under family {family:?}")));
        }
        let v: f64 = record[pv]
            .parse()
            .map_err(|_| Error::Schema(format!("unparseable value {:?}", &record[pv])))?;
        if values[i][j].replace(v).is_some() {
            return Err(Error::Schema(format!("duplicate value for {subject}/{roi}/{feature}")));
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .enumerate()
                .map(|(j, v)| {
                    v.ok_or_else(|| {
                        Error::Schema(format!(
                            "missing value for {}/{}/{}",
                            sidecar.subjects[i], sidecar.columns[j].roi, sidecar.columns[j].feature
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cohort = CohortMatrix::new(sidecar.subjects.clone(), sidecar.columns.clone(), values)?;
    cohort.standardization = sidecar.standardization.clone();
    Ok((cohort, sidecar))
}
