//! JSON bodies of the HTTP interface.

use mfa_dvv_core::compositor::StageTimings;
use mfa_dvv_core::dataset::DatasetManifest;
use mfa_dvv_core::render::{
    presets, Camera, RayCastConfig, RenderRequest, Shading, TfNode, TransferFunction,
};
use serde::{Deserialize, Serialize};

pub const MAX_IMAGE_SIDE: usize = 4096;
pub const DEFAULT_PRESET: &str = "warm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    /// Half width, half height, doubled ray step.
    Preview,
    #[default]
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraBody {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    #[serde(default = "default_fov")]
    pub fov: f64,
}

fn default_up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_fov() -> f64 {
    35.0
}

/// `POST /api/render` body. Transfer nodes take normalized values in
/// `[0, 1]` over the dataset's value range; `preset` is used when `transfer`
/// is absent. `step` defaults to half the finest grid spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderBody {
    pub dataset: String,
    pub camera: CameraBody,
    #[serde(default)]
    pub transfer: Option<Vec<TfNode>>,
    #[serde(default)]
    pub preset: Option<String>,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub quality: Quality,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub shading: bool,
    #[serde(default)]
    pub background: Option<[f64; 4]>,
    /// Echoed back so clients can drop stale responses.
    #[serde(default)]
    pub request_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetBody {
    pub name: String,
    pub nodes: Vec<TfNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersededBody {
    pub status: String,
    pub request_id: Option<String>,
}

/// Timing record carried in the `x-timings` response header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingBody {
    #[serde(flatten)]
    pub timings: StageTimings,
    pub quality: Quality,
    pub width: usize,
    pub height: usize,
}

pub fn preset_bodies() -> Vec<PresetBody> {
    presets()
        .into_iter()
        .map(|(name, nodes)| PresetBody {
            name: name.to_string(),
            nodes,
        })
        .collect()
}

pub fn default_step(manifest: &DatasetManifest) -> f64 {
    (0..3)
        .map(|a| {
            (manifest.domain_max[a] - manifest.domain_min[a]) / (manifest.grid_dims[a] - 1) as f64
        })
        .fold(f64::INFINITY, f64::min)
        * 0.5
}

impl RenderBody {
    /// Resolves the body against a dataset into a core render request.
    pub fn to_request(&self, manifest: &DatasetManifest) -> Result<RenderRequest, String> {
        for (name, v) in [("width", self.width), ("height", self.height)] {
            if v == 0 || v > MAX_IMAGE_SIDE {
                return Err(format!("{name} must be in 1..={MAX_IMAGE_SIDE}, got {v}"));
            }
        }
        let step = self.step.unwrap_or_else(|| default_step(manifest));
        if !(step > 0.0 && step.is_finite()) {
            return Err(format!("step must be positive, got {step}"));
        }
        let nodes = match (&self.transfer, &self.preset) {
            (Some(nodes), _) => nodes.clone(),
            (None, name) => {
                let name = name.as_deref().unwrap_or(DEFAULT_PRESET);
                presets()
                    .into_iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, nodes)| nodes)
                    .ok_or_else(|| format!("unknown preset {name:?}"))?
            }
        };
        // Opacities are defined at the full-quality step so a preview's
        // longer step is opacity-corrected to the same look.
        let tf = TransferFunction::new(nodes, step).map_err(|e| e.to_string())?;
        let (width, height, step) = match self.quality {
            Quality::Full => (self.width, self.height, step),
            Quality::Preview => (self.width.div_ceil(2), self.height.div_ceil(2), 2.0 * step),
        };
        let camera = Camera {
            position: self.camera.position,
            look_at: self.camera.look_at,
            up: self.camera.up,
            fov_deg: self.camera.fov,
            width,
            height,
        };
        let mut config = RayCastConfig {
            step,
            shading: if self.shading {
                Shading::default_blinn_phong()
            } else {
                Shading::Off
            },
            ..RayCastConfig::default()
        };
        if let Some(bg) = self.background {
            config.background = bg;
        }
        let request = RenderRequest {
            camera,
            tf,
            config,
            value_range: manifest.value_range,
        };
        request.validate().map_err(|e| e.to_string())?;
        Ok(request)
    }
}
