//! Orchestration: run one scene or a batch, write outputs and manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use solo_core::pipeline::{self, PipelineOutput, StageHashes};
use solo_core::raster::IdMask;
use solo_core::rng::{fnv1a, fnv1a_extend};
use solo_core::tracer::{self, LinearImage, RenderSettings, Scene};

use crate::config::{AblationConfig, PipelineConfig};
use crate::error::SceneError;
use crate::scene::load_scene_bundle;
use crate::{mesh_ply, pfm, png_io};

/// Component sets that `--ablate` can switch off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblateSet {
    Geometric,
    Lights,
    Isp,
}

impl AblateSet {
    pub fn parse_list(spec: &str) -> Result<Vec<AblateSet>, SceneError> {
        spec.split(',')
            .filter(|t| !t.is_empty())
            .map(|token| match token.trim() {
                "geometric" => Ok(AblateSet::Geometric),
                "lights" => Ok(AblateSet::Lights),
                "isp" => Ok(AblateSet::Isp),
                other => Err(SceneError::Manifest(format!(
                    "unknown ablation set '{other}' (expected geometric, lights, isp)"
                ))),
            })
            .collect()
    }
}

/// CLI-level knobs applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub ablate: Vec<AblateSet>,
    pub dump_intermediates: bool,
    pub workers: Option<usize>,
}

impl RunOptions {
    /// Folds the overrides into the configuration; the manifest then hashes
    /// exactly what ran.
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        for set in &self.ablate {
            match set {
                AblateSet::Geometric => cfg.ablation.geometric = false,
                AblateSet::Lights => cfg.ablation.lights_instantiation = false,
                AblateSet::Isp => cfg.ablation.image_post_processing = false,
            }
        }
    }
}

/// Per-scene seed: derived from the global seed and the scene id, so batches
/// are reproducible and scene order is irrelevant.
pub fn scene_seed(global_seed: u64, scene_id: &str) -> u64 {
    fnv1a_extend(fnv1a(&global_seed.to_le_bytes()), scene_id.as_bytes())
}

fn hex(h: u64) -> String {
    format!("{h:016x}")
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct StageHashesJson {
    pub refined_depth: String,
    pub mesh: String,
    pub lights: String,
    pub linear_image: String,
    pub night_image: String,
}

impl From<StageHashes> for StageHashesJson {
    fn from(h: StageHashes) -> Self {
        StageHashesJson {
            refined_depth: hex(h.refined_depth),
            mesh: hex(h.mesh),
            lights: hex(h.lights),
            linear_image: hex(h.linear_image),
            night_image: hex(h.night_image),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub scene: String,
    pub seed: u64,
    pub config_hash: String,
    pub ablation: AblationConfig,
    pub stage_hashes: StageHashesJson,
    pub output: PathBuf,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchSceneRecord {
    pub scene: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchManifest {
    pub global_seed: u64,
    pub config_hash: String,
    pub scenes: Vec<BatchSceneRecord>,
}

/// Renders by parallelizing over row bands; bit-identical to the serial
/// renderer because every (pixel, sample) pair owns its RNG stream.
pub fn render_parallel(scene: &Scene, settings: &RenderSettings) -> Result<LinearImage, solo_core::CoreError> {
    let band = 8usize;
    let starts: Vec<usize> = (0..settings.height).step_by(band).collect();
    let bands: Vec<(Vec<solo_core::math::Vec3>, u64)> = starts
        .par_iter()
        .map(|&row| tracer::render_rows(scene, settings, row, (row + band).min(settings.height)))
        .collect();
    let mut pixels = Vec::with_capacity(settings.width * settings.height);
    let mut bad = 0u64;
    for (chunk, chunk_bad) in bands {
        pixels.extend(chunk);
        bad += chunk_bad;
    }
    let total = settings.width as u64 * settings.height as u64 * settings.samples_per_pixel as u64;
    tracer::finish_image(pixels, bad, total, settings)
}

fn dump_intermediates(out_dir: &Path, output: &PipelineOutput) -> Result<(), SceneError> {
    pfm::write_pfm(&out_dir.join("filtered_depth.pfm"), &output.filtered_depth)?;
    pfm::write_pfm(&out_dir.join("refined_depth.pfm"), &output.refined_depth)?;
    let (w, h) = (output.width, output.height);
    let mut uncertain = IdMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            if output.uncertain.uncertain.get(x, y) {
                uncertain.set(x, y, u16::MAX);
            }
        }
    }
    png_io::write_mask16(&out_dir.join("uncertain.png"), &uncertain)?;
    pfm::write_pfm(&out_dir.join("linear.pfm"), &output.linear.pixels)?;
    mesh_ply::write_ply(&out_dir.join("mesh.ply"), output.scene.mesh())?;
    Ok(())
}

/// Runs the pipeline for one scene manifest and writes night.png plus
/// manifest.json (and intermediates when requested) into `out_dir`.
pub fn run_scene(
    scene_path: &Path,
    cfg: &PipelineConfig,
    out_dir: &Path,
    options: &RunOptions,
) -> Result<RunManifest, SceneError> {
    let mut cfg = cfg.clone();
    options.apply(&mut cfg);
    let config_hash = hex(pipeline::hash_bytes(&cfg.canonical_bytes()));

    std::fs::create_dir_all(out_dir)
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", out_dir.display())))?;

    let mut timings = BTreeMap::new();
    let t0 = Instant::now();
    let bundle = load_scene_bundle(scene_path, &cfg.upsample_options()?)?;
    timings.insert("load".to_string(), t0.elapsed().as_secs_f64() * 1e3);

    let params = cfg.to_pipeline_params(scene_path.parent().unwrap_or(Path::new(".")))?;
    let seed = scene_seed(cfg.seed, &bundle.id);

    let t1 = Instant::now();
    let output = pipeline::simulate_with(&bundle.inputs, &params, seed, render_parallel)?;
    timings.insert("pipeline".to_string(), t1.elapsed().as_secs_f64() * 1e3);

    let night_path = out_dir.join("night.png");
    png_io::write_rgb8(&night_path, output.width, output.height, &output.night_rgb8)?;
    if options.dump_intermediates {
        dump_intermediates(out_dir, &output)?;
    }

    let manifest = RunManifest {
        scene: bundle.id.clone(),
        seed,
        config_hash,
        ablation: cfg.ablation.clone(),
        stage_hashes: output.stage_hashes.into(),
        output: night_path,
        timings_ms: timings,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Processes many scenes, one output directory per scene id. Failures are
/// recorded and the batch continues.
pub fn run_batch(
    scene_paths: &[PathBuf],
    cfg: &PipelineConfig,
    out_dir: &Path,
    options: &RunOptions,
) -> Result<BatchManifest, SceneError> {
    let mut cfg = cfg.clone();
    options.apply(&mut cfg);
    let config_hash = hex(pipeline::hash_bytes(&cfg.canonical_bytes()));
    std::fs::create_dir_all(out_dir)
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", out_dir.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.unwrap_or(0))
        .build()
        .map_err(|e| SceneError::Manifest(format!("thread pool: {e}")))?;

    let per_scene_options = RunOptions { workers: None, ..options.clone() };
    let records: Vec<BatchSceneRecord> = pool.install(|| {
        scene_paths
            .par_iter()
            .map(|path| {
                let scene_name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "scene".into());
                let scene_dir = out_dir.join(&scene_name);
                match run_scene(path, &cfg, &scene_dir, &per_scene_options) {
                    Ok(manifest) => BatchSceneRecord {
                        scene: manifest.scene.clone(),
                        ok: true,
                        error: None,
                        manifest: Some(manifest),
                    },
                    Err(e) => BatchSceneRecord {
                        scene: scene_name,
                        ok: false,
                        error: Some(e.to_string()),
                        manifest: None,
                    },
                }
            })
            .collect()
    });

    let manifest = BatchManifest { global_seed: cfg.seed, config_hash, scenes: records };
    write_json(&out_dir.join("batch_manifest.json"), &manifest)?;
    Ok(manifest)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), SceneError> {
    std::fs::write(path, serde_json::to_string_pretty(value).expect("serializes"))
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))
}

/// Strips timing fields for determinism comparisons.
pub fn manifest_without_timings(manifest: &RunManifest) -> RunManifest {
    RunManifest { timings_ms: BTreeMap::new(), ..manifest.clone() }
}
