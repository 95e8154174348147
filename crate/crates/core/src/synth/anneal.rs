//! Inverse synthesis: simulated annealing over [`BlobParams`] to match
//! target radiomics features inside a circular conditioning mask.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::blob::{BlobParams, BlobRenderer, FOURIER_MODES, PARAM_COUNT};
use crate::error::{io_err, Error, Result};
use crate::features::{extract_features, Family, FamilySet, FeatureVector, RoiFeatures};
use crate::grid::{ImageGrid, LabelGrid};
use crate::intensity::DiscretizationConfig;
use crate::roi::{circular_mask, mask_from_labels, BinaryMask, RoiSpec};

/// Evaluations without a new best before the chain returns to the best state.
const STALL_LIMIT: usize = 300;

/// Features whose value may be zero or change sign; their default scale
/// floor is 1 instead of a tiny epsilon.
const SIGN_INDEFINITE: [&str; 4] = ["skewness", "cluster_shade", "correlation", "imc1"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTarget {
    pub roi: String,
    pub feature: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl FeatureTarget {
    pub fn new(roi: impl Into<String>, feature: impl Into<String>, value: f64) -> Self {
        Self {
            roi: roi.into(),
            feature: feature.into(),
            value,
            weight: None,
            scale: None,
        }
    }

    pub fn family(&self) -> Option<Family> {
        Family::of_feature(&self.feature)
    }

    /// Shape and first-order targets weigh 1, texture targets 0.25.
    pub fn weight(&self) -> f64 {
        self.weight.unwrap_or(match self.family() {
            Some(Family::Glcm | Family::Glszm) => 0.25,
            _ => 1.0,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale.unwrap_or_else(|| {
            let floor = if SIGN_INDEFINITE.contains(&self.feature.as_str()) {
                1.0
            } else {
                1e-6
            };
            self.value.abs().max(floor)
        })
    }
}

/// Which features [`TargetSpec::from_features`] turns into targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetProfile {
    /// Geometry, robust intensity statistics and a few stable texture features.
    Core,
    /// Every extracted feature.
    Full,
    /// Only pixel surface and sphericity of the combined tumor.
    Shape,
}

impl std::str::FromStr for TargetProfile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "core" => Ok(Self::Core),
            "full" => Ok(Self::Full),
            "shape" => Ok(Self::Shape),
            _ => Err(Error::InvalidArgument(format!("unknown target profile '{s}'"))),
        }
    }
}

const CORE_SHAPE: [&str; 7] = [
    "elongation",
    "major_axis_length",
    "maximum_diameter",
    "minor_axis_length",
    "perimeter",
    "pixel_surface",
    "sphericity",
];
const CORE_SHAPE_INNER: [&str; 3] = ["perimeter", "pixel_surface", "sphericity"];
const CORE_INTENSITY: [&str; 11] = [
    "interquartile_range",
    "mean",
    "mean_absolute_deviation",
    "median",
    "p10",
    "p90",
    "contrast",
    "idm",
    "joint_entropy",
    "small_area_emphasis",
    "zone_percentage",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub mask_diameter_mm: f64,
    pub targets: Vec<FeatureTarget>,
}

impl TargetSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mask_diameter_mm > 0.0 && self.mask_diameter_mm.is_finite()) {
            return Err(Error::InvalidArgument("mask_diameter_mm must be > 0".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::InvalidArgument("target set is empty".into()));
        }
        for t in &self.targets {
            if t.family().is_none() {
                return Err(Error::Schema(format!("unknown feature '{}'", t.feature)));
            }
            if !t.value.is_finite() {
                return Err(Error::InvalidArgument(format!("target {} is not finite", t.feature)));
            }
            if !(t.weight() > 0.0 && t.weight().is_finite()) {
                return Err(Error::InvalidArgument(format!("weight of {} must be > 0", t.feature)));
            }
            if !(t.scale() > 0.0 && t.scale().is_finite()) {
                return Err(Error::InvalidArgument(format!("scale of {} must be > 0", t.feature)));
            }
        }
        Ok(())
    }

    /// Targets taken from an extracted vector. Shape features of the last ROI
    /// are expected to describe the whole tumor, as with the default ROIs.
    pub fn from_features(fv: &FeatureVector, profile: TargetProfile, mask_diameter_mm: f64) -> Self {
        let last_roi = fv.entries.last().map(|e| e.roi.clone()).unwrap_or_default();
        let targets = fv
            .entries
            .iter()
            .filter(|e| match profile {
                TargetProfile::Full => true,
                TargetProfile::Shape => {
                    e.roi == last_roi && (e.feature == "pixel_surface" || e.feature == "sphericity")
                }
                TargetProfile::Core => match e.family {
                    Family::Shape if e.roi == last_roi => CORE_SHAPE.contains(&e.feature.as_str()),
                    Family::Shape => CORE_SHAPE_INNER.contains(&e.feature.as_str()),
                    _ => CORE_INTENSITY.contains(&e.feature.as_str()),
                },
            })
            .map(|e| FeatureTarget::new(e.roi.clone(), e.feature.clone(), e.value))
            .collect();
        Self {
            mask_diameter_mm,
            targets,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let spec: TargetSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    fn find(&self, roi: &str, feature: &str) -> Option<f64> {
        self.targets
            .iter()
            .find(|t| t.roi == roi && t.feature == feature)
            .map(|t| t.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Number of objective evaluations, including the initial guess.
    pub budget: usize,
    pub rois: Vec<RoiSpec>,
    pub discretization: DiscretizationConfig,
    pub cooling: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            budget: 5000,
            rois: vec![RoiSpec::roi1(), RoiSpec::roi2()],
            discretization: DiscretizationConfig::default(),
            cooling: 0.995,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub evaluation: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub image: ImageGrid,
    pub labels: LabelGrid,
    pub params: BlobParams,
    pub achieved: FeatureVector,
    pub objective: f64,
    pub initial_objective: f64,
    pub evaluations: usize,
    pub accepted: usize,
    pub seed: u64,
    /// Best objective after each improvement.
    pub trace: Vec<TracePoint>,
    pub pipeline: Vec<String>,
}

struct Term {
    roi: usize,
    feature: String,
    value: f64,
    weight: f64,
    scale: f64,
}

/// The weighted squared-relative-error objective.
struct Objective {
    rois: Vec<(RoiSpec, FamilySet)>,
    terms: Vec<Term>,
    disc: DiscretizationConfig,
}

impl Objective {
    fn new(target: &TargetSpec, rois: &[RoiSpec], disc: DiscretizationConfig) -> Result<Self> {
        let mut used: Vec<(RoiSpec, FamilySet)> = Vec::new();
        let mut terms = Vec::new();
        for t in &target.targets {
            let spec = rois
                .iter()
                .find(|r| r.name == t.roi)
                .ok_or_else(|| Error::Schema(format!("target names unknown ROI '{}'", t.roi)))?;
            let k = match used.iter().position(|(r, _)| r.name == spec.name) {
                Some(k) => k,
                None => {
                    used.push((spec.clone(), FamilySet::NONE));
                    used.len() - 1
                }
            };
            used[k].1.insert(t.family().expect("validated"));
            terms.push(Term {
                roi: k,
                feature: t.feature.clone(),
                value: t.value,
                weight: t.weight(),
                scale: t.scale(),
            });
        }
        if terms.iter().map(|t| t.weight).sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument("all target weights are zero".into()));
        }
        Ok(Self { rois: used, terms, disc })
    }

    fn evaluate(&self, image: &ImageGrid, labels: &LabelGrid) -> Result<f64> {
        let mut computed = Vec::with_capacity(self.rois.len());
        for (roi, families) in &self.rois {
            let mask = mask_from_labels(labels, roi);
            let shape = mask_from_labels(labels, &roi.shape_roi());
            computed.push(RoiFeatures::compute(image, &mask, &shape, &self.disc, *families)?);
        }
        let mut total = 0.0;
        for t in &self.terms {
            let v = computed[t.roi].get(&t.feature).expect("family computed");
            total += t.weight * ((v - t.value) / t.scale).powi(2);
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::Degenerate("objective is not finite".into()))
        }
    }
}

struct Candidate {
    params: BlobParams,
    image: ImageGrid,
    labels: LabelGrid,
    objective: f64,
}

struct Problem<'a> {
    renderer: BlobRenderer,
    background: &'a ImageGrid,
    circle: BinaryMask,
    objective: Objective,
}

impl Problem<'_> {
    fn try_eval(&self, params: &BlobParams) -> Result<Candidate> {
        let (image, labels) = self.renderer.render(params, self.background)?;
        if labels.data().iter().zip(self.circle.bits()).any(|(&l, &inside)| l != 0 && !inside) {
            return Err(Error::Infeasible("blob leaves the conditioning circle".into()));
        }
        let objective = self.objective.evaluate(&image, &labels)?;
        Ok(Candidate {
            params: *params,
            image,
            labels,
            objective,
        })
    }
}

/// Synthesizes a tumor around `mask_center` whose features approach
/// `target`. Pixels outside the conditioning circle are never modified.
pub fn synthesize(
    background: &ImageGrid,
    mask_center: (f64, f64),
    target: &TargetSpec,
    config: &SynthConfig,
) -> Result<SynthesisResult> {
    target.validate()?;
    config.discretization.validate()?;
    if config.budget == 0 {
        return Err(Error::InvalidArgument("budget must be >= 1".into()));
    }
    if !(config.cooling > 0.0 && config.cooling < 1.0) {
        return Err(Error::InvalidArgument("cooling factor must lie in (0, 1)".into()));
    }
    let geometry = *background.geometry();
    let circle = circular_mask(&geometry, mask_center, target.mask_diameter_mm)?;
    let problem = Problem {
        renderer: BlobRenderer::new(geometry, config.seed)?,
        background,
        objective: Objective::new(target, &config.rois, config.discretization)?,
        circle,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5EED_B10B);

    let mut current = initial_candidate(&problem, mask_center, target, config, &mut rng)?;
    let initial_objective = current.objective;
    let mut best_params = current.params;
    let mut best_objective = current.objective;
    let mut trace = vec![TracePoint {
        evaluation: 1,
        objective: best_objective,
    }];

    let mut steps = initial_steps(&current.params);
    let (step_lo, step_hi) = (steps.map(|s| s * 1e-3), steps.map(|s| s * 3.0));
    let mut proposed = [0usize; PARAM_COUNT];
    let mut taken = [0usize; PARAM_COUNT];
    let (mut evaluations, mut accepted) = (1, 0);
    let mut last_improvement = 1;
    let t0 = initial_objective;
    let mut temperature = t0;

    while evaluations < config.budget && best_objective > 0.0 {
        let mut v = current.params.to_vector();
        let mut chosen = [false; PARAM_COUNT];
        for c in chosen.iter_mut() {
            *c = rng.random::<f64>() < 0.12;
        }
        if !chosen.iter().any(|&c| c) {
            chosen[rng.random_range(0..PARAM_COUNT)] = true;
        }
        for k in 0..PARAM_COUNT {
            if chosen[k] {
                let z: f64 = StandardNormal.sample(&mut rng);
                v[k] += steps[k] * z;
                proposed[k] += 1;
            }
        }
        let params = BlobParams::from_vector(&v);
        evaluations += 1;
        let u: f64 = rng.random();
        if let Ok(cand) = problem.try_eval(&params) {
            let delta = cand.objective - current.objective;
            if delta <= 0.0 || (temperature > 0.0 && u < (-delta / temperature).exp()) {
                for k in 0..PARAM_COUNT {
                    if chosen[k] {
                        taken[k] += 1;
                    }
                }
                accepted += 1;
                current = cand;
                if current.objective < best_objective {
                    best_objective = current.objective;
                    best_params = current.params;
                    last_improvement = evaluations;
                    trace.push(TracePoint {
                        evaluation: evaluations,
                        objective: best_objective,
                    });
                }
            }
        }
        temperature *= config.cooling;
        if evaluations - last_improvement >= STALL_LIMIT && current.params != best_params {
            // Stalled away from the best state: resume from it with finer steps.
            current = problem.try_eval(&best_params)?;
            last_improvement = evaluations;
            for (s, lo) in steps.iter_mut().zip(&step_lo) {
                *s = (*s * 0.5).max(*lo);
            }
        }
        if evaluations % 100 == 0 {
            for k in 0..PARAM_COUNT {
                if proposed[k] >= 5 {
                    let rate = taken[k] as f64 / proposed[k] as f64;
                    if rate > 0.3 {
                        steps[k] = (steps[k] * 1.3).min(step_hi[k]);
                    } else if rate < 0.1 {
                        steps[k] = (steps[k] * 0.7).max(step_lo[k]);
                    }
                    proposed[k] = 0;
                    taken[k] = 0;
                }
            }
        }
    }

    let best = if best_params == current.params {
        current
    } else {
        problem.try_eval(&best_params)?
    };
    let achieved = extract_features(&best.image, &best.labels, &config.rois, &config.discretization)?
        .with_source("synthesize")
        .with_seed(config.seed);
    Ok(SynthesisResult {
        image: best.image,
        labels: best.labels,
        params: best.params,
        achieved,
        objective: best.objective,
        initial_objective,
        evaluations,
        accepted,
        seed: config.seed,
        trace,
        pipeline: vec!["synthesize".into()],
    })
}

fn initial_steps(p: &BlobParams) -> [f64; PARAM_COUNT] {
    let mut s = [0.02; PARAM_COUNT];
    s[0] = 0.02 * p.r0;
    s[1] = 0.02 * p.r0;
    s[2] = 0.02 * p.r0;
    let t = 3 + 2 * FOURIER_MODES;
    s[t] = 0.02;
    s[t + 1] = 0.02 * p.mu_ncr.abs().max(10.0);
    s[t + 2] = 0.02 * p.mu_et.abs().max(10.0);
    s[t + 3] = 0.05 * p.sigma_tex + 0.5;
    s[t + 4] = 0.1;
    s
}

/// Starting point derived from the targets. The Fourier coefficients get a
/// small seeded perturbation so different seeds start in different basins.
fn initial_candidate(
    problem: &Problem,
    center: (f64, f64),
    target: &TargetSpec,
    config: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Candidate> {
    let names: Vec<&str> = config.rois.iter().map(|r| r.name.as_str()).collect();
    let inner = names.first().copied().unwrap_or("roi1");
    let outer = names.last().copied().unwrap_or("roi2");
    let radius_limit = 0.45 * target.mask_diameter_mm;
    let outer_area = target.find(outer, "pixel_surface").or_else(|| target.find(outer, "mesh_surface"));
    let mut r0 = outer_area
        .map(|a| (a / std::f64::consts::PI).sqrt())
        .or_else(|| target.find(outer, "maximum_diameter").map(|d| d / 2.0))
        .unwrap_or(0.3 * target.mask_diameter_mm)
        .min(radius_limit);
    let core_ratio = match (target.find(inner, "pixel_surface"), outer_area) {
        (Some(a1), Some(a)) if a > 0.0 => (a1 / a).sqrt().clamp(0.1, 0.9),
        _ => 0.5,
    };
    let inside: Vec<f64> = problem.circle.indices().map(|i| problem.background.data()[i]).collect();
    let bg_mean = inside.iter().sum::<f64>() / inside.len() as f64;
    let mu_ncr = target.find(inner, "mean").unwrap_or(0.5 * bg_mean);
    let mu_et = target.find(outer, "mean").unwrap_or(1.6 * bg_mean);
    let sigma_tex = target
        .find(outer, "variance")
        .map(f64::sqrt)
        .or_else(|| target.find(outer, "mean_absolute_deviation").map(|m| 1.2533 * m))
        .unwrap_or(0.05 * mu_et.abs());

    let jitter = Normal::new(0.0, 1.0).expect("unit normal");
    let mut a = [0.0; FOURIER_MODES];
    let mut b = [0.0; FOURIER_MODES];
    for k in 0..FOURIER_MODES {
        let s = 0.03 / (k + 1) as f64;
        a[k] = s * jitter.sample(rng);
        b[k] = s * jitter.sample(rng);
    }
    let mut params = BlobParams {
        center,
        r0,
        a,
        b,
        core_ratio,
        mu_ncr,
        mu_et,
        sigma_tex,
        smooth_px: 0.5,
    };
    let mut last_err = None;
    for _ in 0..40 {
        match problem.try_eval(&params) {
            Ok(c) => return Ok(c),
            Err(e) => last_err = Some(e),
        }
        r0 *= 0.9;
        params.r0 = r0;
    }
    Err(Error::Infeasible(format!(
        "no feasible initial blob inside the conditioning circle ({})",
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Per-target `(target, achieved)` pairs of a result, keyed by ROI and feature.
pub fn target_report(target: &TargetSpec, achieved: &FeatureVector) -> BTreeMap<(String, String), (f64, Option<f64>)> {
    target
        .targets
        .iter()
        .map(|t| {
            (
                (t.roi.clone(), t.feature.clone()),
                (t.value, achieved.get(&t.roi, &t.feature)),
            )
        })
        .collect()
}
