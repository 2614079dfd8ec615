//! Pipeline configuration: one TOML file whose defaults are the production
//! constants, mapped onto the core parameter structs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use solo_core::color::Chromaticity;
use solo_core::depth::DepthOptParams;
use solo_core::isp::{GlareParams, IspParams, NoiseParams};
use solo_core::lights::{BoundsRow, BoundsTable, EgoHeadlights, IlluminantDb};
use solo_core::math::Vec3;
use solo_core::pipeline::{
    AblationFlags, DepthRefineParams, LightParams, MeshParams, PipelineParams, RenderParams,
};
use solo_core::resample::GuideChannel;

use crate::defaults;
use crate::error::SceneError;
use crate::scene::UpsampleOptions;

fn default_seed() -> u64 {
    0
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpsampleConfig {
    pub sigma_range: f64,
    /// "luma" or "rgb".
    pub guide: String,
}

impl Default for UpsampleConfig {
    fn default() -> Self {
        UpsampleConfig { sigma_range: 0.1, guide: "luma".into() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthConfig {
    pub sigma_s: f64,
    pub window: usize,
    pub variance_threshold: f64,
    /// Meters; omitted means the per-scene depth mid-range.
    pub distance_cutoff: Option<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub learning_rate: f64,
    pub iterations: usize,
}

impl Default for DepthConfig {
    fn default() -> Self {
        DepthConfig {
            sigma_s: 5.0,
            window: 10,
            variance_threshold: 0.01,
            distance_cutoff: None,
            lambda1: 50.0,
            lambda2: 1.0,
            learning_rate: 2e-4,
            iterations: 1000,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub tau: f64,
    pub far_depth_factor: f64,
    pub backdrop_albedo: f64,
    pub sky_radiance: f64,
    pub floor_band_px: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        let d = MeshParams::default();
        MeshConfig {
            tau: d.tau,
            far_depth_factor: d.far_depth_factor,
            backdrop_albedo: d.backdrop_albedo,
            sky_radiance: d.sky_radiance,
            floor_band_px: d.floor_band_px,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct EgoConfig {
    pub enabled: bool,
    pub offset: [f64; 3],
    pub width: f64,
    pub height: f64,
    pub strength: [f64; 2],
}

impl Default for EgoConfig {
    fn default() -> Self {
        let d = EgoHeadlights::default();
        EgoConfig {
            enabled: d.enabled,
            offset: d.offset.to_array(),
            width: d.width,
            height: d.height,
            strength: [d.strength.0, d.strength.1],
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightsConfig {
    /// Optional JSON overrides for the built-in tables.
    pub bounds_path: Option<PathBuf>,
    pub illuminants_path: Option<PathBuf>,
    /// Strength intervals by category; missing entries use built-ins.
    pub strengths: BTreeMap<String, [f64; 2]>,
    pub ego: EgoConfig,
    pub uniform_strength: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub samples_per_pixel: u32,
    pub max_bounces: u32,
    pub jitter: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig { samples_per_pixel: 256, max_bounces: 4, jitter: true }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct IspConfig {
    pub exposure_stops: f64,
    pub gamma: f64,
    pub source_white: [f64; 2],
    pub destination_white: [f64; 2],
    pub glare_threshold: f64,
    pub glare_sigmas: [f64; 3],
    pub glare_weights: [f64; 3],
    pub noise_signal_dependent: f64,
    pub noise_signal_independent: f64,
}

impl Default for IspConfig {
    fn default() -> Self {
        let d = IspParams::default();
        IspConfig {
            exposure_stops: d.exposure_stops,
            gamma: d.gamma,
            source_white: [d.source_white.x, d.source_white.y],
            destination_white: [d.destination_white.x, d.destination_white.y],
            glare_threshold: d.glare.threshold,
            glare_sigmas: d.glare.sigmas,
            glare_weights: d.glare.weights,
            noise_signal_dependent: d.noise.signal_dependent,
            noise_signal_independent: d.noise.signal_independent,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub geometric: bool,
    pub lights_instantiation: bool,
    pub image_post_processing: bool,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig { geometric: true, lights_instantiation: true, image_post_processing: true }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub upsample: UpsampleConfig,
    pub depth_refine: DepthConfig,
    pub mesh: MeshConfig,
    pub lights: LightsConfig,
    pub render: RenderConfig,
    pub isp: IspConfig,
    pub ablation: AblationConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig, SceneError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))
    }

    /// Canonical bytes used to fingerprint a run's configuration.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("config serializes")
    }

    pub fn upsample_options(&self) -> Result<UpsampleOptions, SceneError> {
        let guide = match self.upsample.guide.as_str() {
            "luma" => GuideChannel::Luma,
            "rgb" => GuideChannel::Rgb,
            other => {
                return Err(SceneError::Manifest(format!(
                    "upsample.guide must be 'luma' or 'rgb', got '{other}'"
                )))
            }
        };
        Ok(UpsampleOptions { sigma_range: self.upsample.sigma_range, guide })
    }

    /// Resolves table paths (relative to `base`) and assembles the core params.
    pub fn to_pipeline_params(&self, base: &Path) -> Result<PipelineParams, SceneError> {
        let bounds = match &self.lights.bounds_path {
            Some(p) => load_bounds_json(&abs(base, p))?,
            None => defaults::default_bounds(),
        };
        if !bounds.is_valid() {
            return Err(SceneError::Manifest("bounds table has rows outside [0, 1]".into()));
        }
        let illuminants = match &self.lights.illuminants_path {
            Some(p) => load_illuminants_json(&abs(base, p))?,
            None => defaults::default_illuminants(),
        };
        if !illuminants.is_physical() {
            return Err(SceneError::Manifest("illuminant database has non-physical samples".into()));
        }
        illuminants.covers(&bounds)?;

        let mut strengths = defaults::default_strengths();
        for (k, [lo, hi]) in &self.lights.strengths {
            strengths.intervals.insert(k.clone(), (*lo, *hi));
        }

        Ok(PipelineParams {
            depth: DepthRefineParams {
                sigma_s: self.depth_refine.sigma_s,
                filter_radius: None,
                window: self.depth_refine.window,
                variance_threshold: self.depth_refine.variance_threshold,
                distance_cutoff: self.depth_refine.distance_cutoff,
                opt: DepthOptParams {
                    lambda1: self.depth_refine.lambda1,
                    lambda2: self.depth_refine.lambda2,
                    learning_rate: self.depth_refine.learning_rate,
                    iterations: self.depth_refine.iterations,
                    ..DepthOptParams::default()
                },
            },
            mesh: MeshParams {
                tau: self.mesh.tau,
                far_depth_factor: self.mesh.far_depth_factor,
                backdrop_albedo: self.mesh.backdrop_albedo,
                sky_radiance: self.mesh.sky_radiance,
                floor_band_px: self.mesh.floor_band_px,
            },
            lights: LightParams {
                bounds,
                illuminants,
                strengths,
                ego: EgoHeadlights {
                    enabled: self.lights.ego.enabled,
                    offset: Vec3::from_array(self.lights.ego.offset),
                    width: self.lights.ego.width,
                    height: self.lights.ego.height,
                    strength: (self.lights.ego.strength[0], self.lights.ego.strength[1]),
                },
                uniform_strength: self.lights.uniform_strength.unwrap_or(4.0),
            },
            render: RenderParams {
                samples_per_pixel: self.render.samples_per_pixel,
                max_bounces: self.render.max_bounces,
                jitter: self.render.jitter,
            },
            isp: IspParams {
                exposure_stops: self.isp.exposure_stops,
                gamma: self.isp.gamma,
                source_white: Chromaticity::new(self.isp.source_white[0], self.isp.source_white[1]),
                destination_white: Chromaticity::new(
                    self.isp.destination_white[0],
                    self.isp.destination_white[1],
                ),
                glare: GlareParams {
                    enabled: true,
                    threshold: self.isp.glare_threshold,
                    sigmas: self.isp.glare_sigmas,
                    weights: self.isp.glare_weights,
                },
                noise: NoiseParams {
                    enabled: true,
                    signal_dependent: self.isp.noise_signal_dependent,
                    signal_independent: self.isp.noise_signal_independent,
                },
                seed: self.seed,
            },
            ablation: AblationFlags {
                geometric: self.ablation.geometric,
                lights_instantiation: self.ablation.lights_instantiation,
                image_post_processing: self.ablation.image_post_processing,
            },
        })
    }
}

fn abs(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Deserialize, Serialize)]
struct BoundsRowJson {
    group: String,
    category: String,
    bounds: [f64; 2],
}

#[derive(Deserialize, Serialize)]
struct BoundsJson {
    rows: Vec<BoundsRowJson>,
}

pub fn load_bounds_json(path: &Path) -> Result<BoundsTable, SceneError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))?;
    let parsed: BoundsJson = serde_json::from_str(&text)
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))?;
    Ok(BoundsTable {
        rows: parsed
            .rows
            .into_iter()
            .map(|r| BoundsRow { group: r.group, category: r.category, lo: r.bounds[0], hi: r.bounds[1] })
            .collect(),
    })
}

pub fn save_bounds_json(path: &Path, table: &BoundsTable) -> Result<(), SceneError> {
    let json = BoundsJson {
        rows: table
            .rows
            .iter()
            .map(|r| BoundsRowJson {
                group: r.group.clone(),
                category: r.category.clone(),
                bounds: [r.lo, r.hi],
            })
            .collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&json).expect("serializes"))
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))
}

/// Illuminant database JSON: {"category": [[x, y], ...], ...}.
pub fn load_illuminants_json(path: &Path) -> Result<IlluminantDb, SceneError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))?;
    let parsed: BTreeMap<String, Vec<[f64; 2]>> = serde_json::from_str(&text)
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))?;
    let mut db = IlluminantDb::default();
    for (k, samples) in parsed {
        db.samples.insert(
            k,
            samples.iter().map(|[x, y]| Chromaticity::new(*x, *y)).collect(),
        );
    }
    Ok(db)
}

pub fn save_illuminants_json(path: &Path, db: &IlluminantDb) -> Result<(), SceneError> {
    let out: BTreeMap<String, Vec<[f64; 2]>> = db
        .samples
        .iter()
        .map(|(k, v)| (k.clone(), v.iter().map(|c| [c.x, c.y]).collect()))
        .collect();
    std::fs::write(path, serde_json::to_string_pretty(&out).expect("serializes"))
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))
}
