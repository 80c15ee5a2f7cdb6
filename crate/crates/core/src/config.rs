//! Versioned JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{CameraPose, ProjectionParams, StereoRig};
use crate::patch::PatchOptions;
use crate::reproject::Downsample;
use crate::scene::ScenePreset;

pub const SCHEMA_VERSION: u32 = 1;

const MAX_SIDE: usize = 16384;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub preset: String,
    #[serde(default = "empty_params")]
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
}

fn empty_params() -> serde_json::Value {
    serde_json::json!({})
}

impl SceneConfig {
    pub fn from_preset(preset: &ScenePreset, seed: u64) -> Self {
        let v = serde_json::to_value(preset).expect("presets serialize");
        SceneConfig {
            preset: preset.name().to_string(),
            params: v.get("params").cloned().unwrap_or_else(empty_params),
            seed,
        }
    }

    pub fn preset(&self) -> Result<ScenePreset> {
        let p = ScenePreset::from_name(&self.preset, self.params.clone())?;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Patcher {
    #[default]
    Yoro,
    Median,
}

impl std::str::FromStr for Patcher {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "yoro" => Ok(Patcher::Yoro),
            "median" => Ok(Patcher::Median),
            _ => Err(Error::config("patch.patcher", format!("unknown patcher {s:?} (yoro|median)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchConfig {
    pub kernel_height: usize,
    pub linear_interp: bool,
    pub patcher: Patcher,
    pub median_window: usize,
}

impl Default for PatchConfig {
    fn default() -> Self {
        let o = PatchOptions::default();
        PatchConfig {
            kernel_height: o.kernel_height,
            linear_interp: o.linear_interp,
            patcher: Patcher::Yoro,
            median_window: 5,
        }
    }
}

impl PatchConfig {
    pub fn options(&self) -> PatchOptions {
        PatchOptions {
            kernel_height: self.kernel_height,
            linear_interp: self.linear_interp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub width: usize,
    pub height: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            width: 512,
            height: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub scene: SceneConfig,
    #[serde(default)]
    pub rig: StereoRig,
    #[serde(default = "identity_pose")]
    pub head: CameraPose,
    #[serde(default)]
    pub projection: ProjectionParams,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub downsample: Downsample,
    #[serde(default)]
    pub patch: PatchConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn identity_pose() -> CameraPose {
    CameraPose::IDENTITY
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl PipelineConfig {
    pub fn new(preset: &ScenePreset, seed: u64) -> Self {
        PipelineConfig {
            schema_version: SCHEMA_VERSION,
            scene: SceneConfig::from_preset(preset, seed),
            rig: StereoRig::default(),
            head: CameraPose::IDENTITY,
            projection: ProjectionParams::default(),
            resolution: Resolution::default(),
            downsample: Downsample::X1,
            patch: PatchConfig::default(),
            output_dir: default_output_dir(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| Error::config("<root>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field, reporting the first offending one by path.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        self.scene.preset()?;
        self.rig.validate().map_err(at("rig.ipd"))?;
        self.head.validate().map_err(at("head"))?;
        self.projection.validate().map_err(at("projection"))?;
        let Resolution { width, height } = self.resolution;
        if width == 0 || width > MAX_SIDE {
            return Err(Error::config("resolution.width", format!("must lie in 1..={MAX_SIDE}")));
        }
        if height == 0 || height > MAX_SIDE {
            return Err(Error::config("resolution.height", format!("must lie in 1..={MAX_SIDE}")));
        }
        self.patch.options().validate().map_err(at("patch.kernel_height"))?;
        if self.patch.median_window < 3 || self.patch.median_window.is_multiple_of(2) {
            return Err(Error::config("patch.median_window", "must be odd and >= 3"));
        }
        Ok(())
    }
}

fn at(field: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::config(field, strip(e))
}

fn strip(e: Error) -> String {
    match e {
        Error::InvalidArgument(m) => m,
        Error::Config { message, .. } => message,
        other => other.to_string(),
    }
}
