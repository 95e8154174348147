//! The archived run configuration and its flag overrides.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use radiosynth_core::grid::write_atomic;
use radiosynth_core::synth::{TargetProfile, DEFAULT_MASK_SCALE, RANDOM_MASK_DIAMETER};
use radiosynth_core::{DiscretizationConfig, MissingPolicy, RoiSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisSettings {
    pub budget: usize,
    pub cooling: f64,
    pub profile: TargetProfile,
    /// Conditioning circle diameter over tumor maximum diameter.
    pub mask_scale: f64,
}

impl Default for SynthesisSettings {
    fn default() -> Self {
        Self {
            budget: 5000,
            cooling: 0.995,
            profile: TargetProfile::Core,
            mask_scale: DEFAULT_MASK_SCALE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FillSettings {
    pub noise: bool,
    /// Diameter range (mm) of random removal masks.
    pub random_mask_diameter: (f64, f64),
}

impl Default for FillSettings {
    fn default() -> Self {
        Self {
            noise: true,
            random_mask_diameter: RANDOM_MASK_DIAMETER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub discretization: DiscretizationConfig,
    pub rois: Vec<RoiSpec>,
    pub missing: MissingPolicy,
    pub synthesis: SynthesisSettings,
    pub fill: FillSettings,
    pub output_dir: PathBuf,
    /// Axial slice picked from 3D NIfTI volumes.
    pub slice: Option<usize>,
    /// Worker threads; 0 means one per core. Never archived: it cannot
    /// change any output.
    #[serde(skip_serializing)]
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            discretization: DiscretizationConfig::default(),
            rois: vec![RoiSpec::roi1(), RoiSpec::roi2()],
            missing: MissingPolicy::Drop,
            synthesis: SynthesisSettings::default(),
            fill: FillSettings::default(),
            output_dir: PathBuf::from("out"),
            slice: None,
            jobs: 1,
        }
    }
}

impl RunConfig {
    /// Reads a plain config or the `config` part of an archived run.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut value: serde_json::Value =
            serde_json::from_slice(&bytes).with_context(|| format!("parsing config {}", path.display()))?;
        if value.get("command").is_some() {
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
        }
        serde_json::from_value(value).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.discretization.validate()?;
        anyhow::ensure!(!self.rois.is_empty(), "config lists no ROIs");
        for roi in &self.rois {
            roi.validate()?;
        }
        anyhow::ensure!(self.synthesis.budget >= 1, "synthesis budget must be >= 1");
        anyhow::ensure!(
            self.synthesis.mask_scale > 0.0 && self.synthesis.mask_scale.is_finite(),
            "mask_scale must be > 0"
        );
        let (lo, hi) = self.fill.random_mask_diameter;
        anyhow::ensure!(lo > 0.0 && lo <= hi, "random_mask_diameter must satisfy 0 < lo <= hi");
        Ok(())
    }

    /// Writes `{command, arguments, config}` next to the outputs.
    pub fn archive<A: Serialize>(&self, command: &str, arguments: &A) -> Result<()> {
        #[derive(Serialize)]
        struct Archived<'a, A> {
            command: &'a str,
            arguments: &'a A,
            config: &'a RunConfig,
        }
        let path = self.output_dir.join(format!("run_config.{command}.json"));
        write_json(
            &path,
            &Archived {
                command,
                arguments,
                config: self,
            },
        )
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(())
}
