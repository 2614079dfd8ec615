//! End-to-end composition of the relighting stages on in-memory data, with
//! ablation switches and per-stage content hashes for reproducibility checks.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::camera::Intrinsics;
use crate::color::Chromaticity;
use crate::depth::{self, DepthOptParams, UncertainMask};
use crate::error::CoreError;
use crate::isp::{self, IspParams};
use crate::lights::{
    self, BoundsTable, EgoHeadlights, IlluminantDb, InstanceClass, LightMask, LightTree,
    StrengthTable,
};
use crate::math::Vec3;
use crate::mesh::{self, Emission, TriangleMesh};
use crate::raster::{IdMask, Raster};
use crate::rng::{fnv1a, fnv1a_extend};
use crate::tracer::{self, LinearImage, RenderSettings, Scene};

/// Full-resolution inputs to the pipeline (already resampled by the loader).
#[derive(Clone, Debug)]
pub struct SceneInputs {
    pub depth: Raster,
    pub normals: Raster,
    pub albedo: Raster,
    pub instance_mask: IdMask,
    pub light_mask: LightMask,
    pub instance_classes: BTreeMap<u16, InstanceClass>,
    pub sky_instance: Option<u16>,
    pub intrinsics: Intrinsics,
}

#[derive(Clone, Copy, Debug)]
pub struct DepthRefineParams {
    pub sigma_s: f64,
    /// None: 3 sigma.
    pub filter_radius: Option<usize>,
    pub window: usize,
    pub variance_threshold: f64,
    /// None: mid-range of the filtered depth.
    pub distance_cutoff: Option<f64>,
    pub opt: DepthOptParams,
}

impl Default for DepthRefineParams {
    fn default() -> Self {
        DepthRefineParams {
            sigma_s: 5.0,
            filter_radius: None,
            window: 10,
            variance_threshold: 0.01,
            distance_cutoff: None,
            opt: DepthOptParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MeshParams {
    /// Relative depth-disparity threshold for spurious faces.
    pub tau: f64,
    /// Backdrop depth as a multiple of the scene's maximum depth.
    pub far_depth_factor: f64,
    pub backdrop_albedo: f64,
    /// Emitted radiance of sky faces (equal-energy XYZ).
    pub sky_radiance: f64,
    /// Image-row band height for building-floor grouping.
    pub floor_band_px: usize,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            tau: 0.3,
            far_depth_factor: 1.5,
            backdrop_albedo: 0.05,
            sky_radiance: 0.003,
            floor_band_px: 32,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LightParams {
    pub bounds: BoundsTable,
    pub illuminants: IlluminantDb,
    pub strengths: StrengthTable,
    pub ego: EgoHeadlights,
    /// Strength used when light instantiation is ablated.
    pub uniform_strength: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct RenderParams {
    pub samples_per_pixel: u32,
    pub max_bounces: u32,
    pub jitter: bool,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams { samples_per_pixel: 256, max_bounces: 4, jitter: true }
    }
}

/// Component sets that can be switched off, mirroring the ablation rows:
/// no flags set is the raw-backprojection / always-on-white-lights / no
/// glare-or-noise configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AblationFlags {
    pub geometric: bool,
    pub lights_instantiation: bool,
    pub image_post_processing: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        AblationFlags { geometric: true, lights_instantiation: true, image_post_processing: true }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineParams {
    pub depth: DepthRefineParams,
    pub mesh: MeshParams,
    pub lights: LightParams,
    pub render: RenderParams,
    pub isp: IspParams,
    pub ablation: AblationFlags,
}

/// FNV-1a hashes of each stage's output; two runs agree iff these agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageHashes {
    pub refined_depth: u64,
    pub mesh: u64,
    pub lights: u64,
    pub linear_image: u64,
    pub night_image: u64,
}

pub struct PipelineOutput {
    pub night_rgb8: Vec<u8>,
    pub width: usize,
    pub height: usize,
    pub linear: LinearImage,
    pub filtered_depth: Raster,
    pub refined_depth: Raster,
    pub uncertain: UncertainMask,
    pub light_tree: LightTree,
    /// The prepared render scene; its mesh backs the PLY dump.
    pub scene: Scene,
    pub stage_hashes: StageHashes,
}

pub fn hash_f64s(seed: u64, data: &[f64]) -> u64 {
    let mut h = seed;
    for v in data {
        h = fnv1a_extend(h, &v.to_bits().to_le_bytes());
    }
    h
}

pub fn hash_bytes(data: &[u8]) -> u64 {
    fnv1a(data)
}

fn hash_mesh(mesh: &TriangleMesh) -> u64 {
    let mut h = fnv1a(b"mesh");
    for v in &mesh.vertices {
        h = hash_f64s(h, &v.to_array());
    }
    for f in &mesh.faces {
        for i in f {
            h = fnv1a_extend(h, &i.to_le_bytes());
        }
    }
    for a in &mesh.attributes {
        h = hash_f64s(h, &a.albedo_rgb.to_array());
        match &a.emission {
            Some(e) => {
                h = hash_f64s(h, &e.radiance.to_array());
                h = hash_f64s(h, &e.normal.to_array());
            }
            None => h = fnv1a_extend(h, b"-"),
        }
    }
    h
}

/// Depth refinement stage: cross-bilateral filter, uncertain regions,
/// normal-guided optimization. Returns (filtered, refined, uncertain); the
/// input depth passes through untouched when the geometric set is ablated.
pub fn refine_depth_stage(
    inputs: &SceneInputs,
    params: &DepthRefineParams,
    geometric: bool,
) -> Result<(Raster, Raster, UncertainMask), CoreError> {
    let (w, h) = (inputs.depth.width(), inputs.depth.height());
    if !geometric {
        return Ok((inputs.depth.clone(), inputs.depth.clone(), UncertainMask::none(w, h)));
    }
    let radius = params.filter_radius.unwrap_or_else(|| depth::default_filter_radius(params.sigma_s));
    let filtered =
        depth::cross_bilateral_filter(&inputs.depth, &inputs.instance_mask, params.sigma_s, radius);
    let cutoff = params.distance_cutoff.unwrap_or_else(|| depth::depth_mid_range(&filtered));
    let uncertain = depth::detect_uncertain_regions(
        &filtered,
        &inputs.instance_mask,
        params.window,
        params.variance_threshold,
        cutoff,
    );
    let result =
        depth::optimize_depth(&filtered, &inputs.normals, &uncertain, &inputs.intrinsics, &params.opt)?;
    Ok((filtered, result.depth, uncertain))
}

/// Geometry stage: backprojection, triangulation, material attachment, sky
/// tagging, and (unless ablated) spurious-face removal plus watertighting.
pub fn build_mesh_stage(
    inputs: &SceneInputs,
    refined_depth: &Raster,
    uncertain: &UncertainMask,
    params: &MeshParams,
    geometric: bool,
) -> Result<TriangleMesh, CoreError> {
    let grid = mesh::backproject(refined_depth, &inputs.intrinsics)?;
    let mut tri = mesh::triangulate_grid(&grid);
    mesh::attach_materials(
        &mut tri,
        &inputs.albedo,
        &inputs.light_mask,
        &inputs.instance_mask,
        inputs.sky_instance,
    );
    // Sky faces double as the dim emissive dome.
    if params.sky_radiance > 0.0 {
        for attrs in &mut tri.attributes {
            if attrs.sky {
                attrs.emission = Some(Emission {
                    radiance: Vec3::splat(params.sky_radiance),
                    normal: attrs.normal,
                });
            }
        }
    }
    if geometric {
        let kept = mesh::remove_spurious_faces(&tri, uncertain, params.tau);
        let far = params.far_depth_factor * refined_depth.max_value();
        tri = mesh::restore_watertight(&kept, far, params.backdrop_albedo)?;
    }
    Ok(tri)
}

/// Light stage: tree construction plus either probabilistic instantiation or
/// the all-on white-uniform ablated assignment; ego head lights included.
pub fn instantiate_lights_stage(
    inputs: &SceneInputs,
    tri: &mut TriangleMesh,
    params: &LightParams,
    mesh_params: &MeshParams,
    seed: u64,
    lights_instantiation: bool,
) -> Result<LightTree, CoreError> {
    let tree = lights::build_light_tree(
        &inputs.light_mask,
        &inputs.instance_mask,
        &inputs.instance_classes,
        tri,
        mesh_params.floor_band_px,
    );
    let resolved = if lights_instantiation {
        lights::instantiate(&tree, &params.illuminants, &params.bounds, &params.strengths, seed)?
    } else {
        lights::instantiate_uniform(&tree, Chromaticity::EQUAL_ENERGY, params.uniform_strength)
    };
    lights::apply_light_tree(tri, &resolved);
    let ego_override = if lights_instantiation {
        None
    } else {
        Some((Chromaticity::EQUAL_ENERGY, params.uniform_strength))
    };
    lights::add_ego_headlights(tri, &params.ego, &params.illuminants, seed, ego_override)?;
    Ok(resolved)
}

/// Runs the whole pipeline. `render_fn` performs the actual rendering so a
/// std caller can substitute a multi-threaded implementation; results must be
/// identical to [`tracer::render`], which the counter-based sampling
/// guarantees for any row partitioning.
pub fn simulate_with<F>(
    inputs: &SceneInputs,
    params: &PipelineParams,
    seed: u64,
    render_fn: F,
) -> Result<PipelineOutput, CoreError>
where
    F: FnOnce(&Scene, &RenderSettings) -> Result<LinearImage, CoreError>,
{
    let (width, height) = (inputs.depth.width(), inputs.depth.height());

    let (filtered_depth, refined_depth, uncertain) =
        refine_depth_stage(inputs, &params.depth, params.ablation.geometric)?;
    let depth_hash = hash_f64s(fnv1a(b"depth"), refined_depth.data());

    let mut tri = build_mesh_stage(
        inputs,
        &refined_depth,
        &uncertain,
        &params.mesh,
        params.ablation.geometric,
    )?;
    let mesh_hash = hash_mesh(&tri);

    let light_tree = instantiate_lights_stage(
        inputs,
        &mut tri,
        &params.lights,
        &params.mesh,
        seed,
        params.ablation.lights_instantiation,
    )?;
    let lights_hash = hash_mesh(&tri);

    let scene = Scene::prepare(tri);
    let settings = RenderSettings {
        width,
        height,
        intrinsics: inputs.intrinsics,
        samples_per_pixel: params.render.samples_per_pixel,
        max_bounces: params.render.max_bounces,
        seed,
        jitter: params.render.jitter,
        light_sampling: tracer::LightSampling::NextEvent,
    };
    let linear = render_fn(&scene, &settings)?;
    let linear_hash = hash_f64s(fnv1a(b"linear"), linear.pixels.data());

    let mut isp_params = params.isp;
    isp_params.seed = seed;
    if !params.ablation.image_post_processing {
        isp_params.glare.enabled = false;
        isp_params.noise.enabled = false;
    }
    let night_rgb8 = isp::develop(&linear.pixels, &isp_params)?;
    let night_hash = hash_bytes(&night_rgb8);

    Ok(PipelineOutput {
        night_rgb8,
        width,
        height,
        linear,
        filtered_depth,
        refined_depth,
        uncertain,
        light_tree,
        scene,
        stage_hashes: StageHashes {
            refined_depth: depth_hash,
            mesh: mesh_hash,
            lights: lights_hash,
            linear_image: linear_hash,
            night_image: night_hash,
        },
    })
}

/// Single-threaded convenience wrapper.
pub fn simulate(
    inputs: &SceneInputs,
    params: &PipelineParams,
    seed: u64,
) -> Result<PipelineOutput, CoreError> {
    simulate_with(inputs, params, seed, |scene, settings| tracer::render(scene, settings))
}
