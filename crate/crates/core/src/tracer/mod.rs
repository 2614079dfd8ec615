//! Physically-based Monte Carlo rendering of the emissive night scene.
//!
//! The integrator is a diffuse path tracer: Lambertian BRDF, cosine-weighted
//! hemisphere sampling for indirect bounces, next-event estimation toward
//! emissive faces (area sampling with solid-angle conversion), and Russian
//! roulette after the third bounce. Color is transported as 3-channel XYZ.
//! Every (pixel, sample) pair owns a counter-based RNG stream, so images are
//! bit-identical for a given seed regardless of how work is scheduled.

pub mod bvh;

use alloc::vec::Vec;

use crate::camera::Intrinsics;
use crate::color::SRGB_TO_XYZ;
use crate::error::CoreError;
use crate::fmath;
use crate::math::Vec3;
use crate::mesh::{Emission, FaceAttributes, TriangleMesh};
use crate::raster::Raster;
use crate::rng::{fnv1a, fnv1a_extend, RngStream};

use bvh::Bvh;

/// Floating-point XYZ radiance buffer produced by the tracer.
#[derive(Clone, Debug)]
pub struct LinearImage {
    pub pixels: Raster,
    pub samples_per_pixel: u32,
    pub seed: u64,
}

/// Lambertian BRDF value: albedo / pi, constant over directions.
#[inline]
pub fn diffuse_brdf(albedo: Vec3) -> Vec3 {
    albedo * core::f64::consts::FRAC_1_PI
}

/// Directional falloff of an area light: cos(pi (|v . n| - 1) / 2) in [0, 1].
/// Maximal along the surface normal, zero at grazing incidence.
#[inline]
pub fn directionality_weight(v: Vec3, light_normal: Vec3) -> f64 {
    let d = v.dot(light_normal).abs().min(1.0);
    fmath::cos(core::f64::consts::FRAC_PI_2 * (d - 1.0))
}

/// Radiance emitted by a face toward `dir_out`; zero for non-emissive faces.
#[inline]
pub fn emitted_radiance(attrs: &FaceAttributes, dir_out: Vec3) -> Vec3 {
    match &attrs.emission {
        Some(e) => e.radiance * directionality_weight(dir_out, e.normal),
        None => Vec3::ZERO,
    }
}

/// Direct-lighting strategy; `BruteForce` exists to validate NEE against
/// plain hemisphere sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LightSampling {
    NextEvent,
    BruteForce,
}

#[derive(Clone, Copy, Debug)]
pub struct RenderSettings {
    pub width: usize,
    pub height: usize,
    pub intrinsics: Intrinsics,
    pub samples_per_pixel: u32,
    pub max_bounces: u32,
    pub seed: u64,
    /// Stratify rays inside each pixel; disable to shoot through pixel centers.
    pub jitter: bool,
    pub light_sampling: LightSampling,
}

impl RenderSettings {
    pub fn new(width: usize, height: usize, intrinsics: Intrinsics) -> Self {
        RenderSettings {
            width,
            height,
            intrinsics,
            samples_per_pixel: 256,
            max_bounces: 4,
            seed: 0,
            jitter: true,
            light_sampling: LightSampling::NextEvent,
        }
    }
}

struct EmissiveFace {
    face: u32,
    area: f64,
    /// Cumulative selection weight (area times peak radiance).
    cdf: f64,
}

/// Immutable acceleration structures and per-face shading data.
pub struct Scene {
    mesh: TriangleMesh,
    bvh: Bvh,
    /// Per-face albedo converted to XYZ reflectance for transport.
    albedo_xyz: Vec<Vec3>,
    emissive: Vec<EmissiveFace>,
    total_light_weight: f64,
}

impl Scene {
    /// Builds the BVH and the emitter table. Albedo given in linear RGB is
    /// converted to XYZ reflectance through the sRGB primaries matrix.
    pub fn prepare(mesh: TriangleMesh) -> Scene {
        let bvh = Bvh::build(&mesh.vertices, &mesh.faces);
        let albedo_xyz = mesh
            .attributes
            .iter()
            .map(|a| SRGB_TO_XYZ.mul_vec(a.albedo_rgb))
            .collect();
        let mut emissive = Vec::new();
        let mut cdf = 0.0;
        for (i, attrs) in mesh.attributes.iter().enumerate() {
            let Some(e) = &attrs.emission else { continue };
            let peak = e.radiance.max_component();
            if peak <= 0.0 {
                continue;
            }
            let f = mesh.faces[i];
            let a = mesh.vertices[f[0] as usize];
            let b = mesh.vertices[f[1] as usize];
            let c = mesh.vertices[f[2] as usize];
            let area = 0.5 * (b - a).cross(c - a).length();
            if area <= 0.0 {
                continue;
            }
            cdf += area * peak;
            emissive.push(EmissiveFace { face: i as u32, area, cdf });
        }
        Scene { mesh, bvh, albedo_xyz, emissive, total_light_weight: cdf }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn has_lights(&self) -> bool {
        !self.emissive.is_empty()
    }

    fn pick_light(&self, u: f64) -> &EmissiveFace {
        let target = u * self.total_light_weight;
        let i = self.emissive.partition_point(|e| e.cdf <= target);
        &self.emissive[i.min(self.emissive.len() - 1)]
    }

    fn sample_point_on_face(&self, face: u32, u1: f64, u2: f64) -> Vec3 {
        let f = self.mesh.faces[face as usize];
        let a = self.mesh.vertices[f[0] as usize];
        let b = self.mesh.vertices[f[1] as usize];
        let c = self.mesh.vertices[f[2] as usize];
        let su = fmath::sqrt(u1);
        let (ba, bb) = (1.0 - su, u2 * su);
        a * ba + b * bb + c * (1.0 - ba - bb)
    }
}

const RAY_T_MIN: f64 = 1e-9;
const ORIGIN_EPS: f64 = 1e-7;
const RR_START: u32 = 3;
const RR_FLOOR: f64 = 0.05;

#[inline]
fn offset_origin(p: Vec3, n: Vec3) -> Vec3 {
    p + n * (ORIGIN_EPS * (1.0 + p.length()))
}

fn cosine_sample_hemisphere(n: Vec3, u1: f64, u2: f64) -> Vec3 {
    let r = fmath::sqrt(u1);
    let phi = 2.0 * core::f64::consts::PI * u2;
    let local = Vec3::new(
        r * fmath::cos(phi),
        r * fmath::sin(phi),
        fmath::sqrt((1.0 - u1).max(0.0)),
    );
    let (t, b) = n.orthonormal_basis();
    t * local.x + b * local.y + n * local.z
}

/// Traces one path; returns its radiance estimate.
fn trace_path(scene: &Scene, settings: &RenderSettings, mut origin: Vec3, mut dir: Vec3, rng: &mut RngStream) -> Vec3 {
    let mut radiance = Vec3::ZERO;
    let mut throughput = Vec3::splat(1.0);

    for depth in 0..=settings.max_bounces {
        let Some(hit) = scene.bvh.intersect(origin, dir, RAY_T_MIN, f64::INFINITY) else {
            break;
        };
        let attrs = &scene.mesh.attributes[hit.face as usize];
        let point = origin + dir * hit.t;
        let geom_n = attrs.normal;
        // Two-sided shading: orient the normal against the incoming ray.
        let shade_n = if geom_n.dot(dir) > 0.0 { -geom_n } else { geom_n };

        if attrs.emission.is_some() {
            // With next-event estimation, emitters hit by indirect rays were
            // already accounted for by the light samples.
            let counts = depth == 0 || settings.light_sampling == LightSampling::BruteForce;
            if counts {
                radiance += throughput.mul_elem(emitted_radiance(attrs, -dir));
            }
        }

        if depth == settings.max_bounces {
            break;
        }

        let albedo = scene.albedo_xyz[hit.face as usize];

        if settings.light_sampling == LightSampling::NextEvent && scene.has_lights() {
            let pick = rng.next_f64();
            let (u1, u2) = (rng.next_f64(), rng.next_f64());
            let light = scene.pick_light(pick);
            let light_attrs = &scene.mesh.attributes[light.face as usize];
            if let Some(Emission { radiance: emit, normal: light_n }) = light_attrs.emission {
                let q = scene.sample_point_on_face(light.face, u1, u2);
                let to_light = q - point;
                let dist2 = to_light.length_squared();
                if dist2 > 0.0 {
                    let dist = fmath::sqrt(dist2);
                    let wi = to_light / dist;
                    let cos_s = shade_n.dot(wi);
                    let cos_l = scene.mesh.attributes[light.face as usize]
                        .normal
                        .dot(wi)
                        .abs();
                    if cos_s > 0.0 && cos_l > 0.0 {
                        let shadow_origin = offset_origin(point, shade_n);
                        let t_max = dist * (1.0 - 1e-6);
                        if !scene.bvh.occluded(shadow_origin, wi, RAY_T_MIN, t_max) {
                            let g = directionality_weight(wi, light_n);
                            // pdf over the light set in area measure:
                            // (weight_f / total) * (1 / area_f).
                            let weight = light.area * emit.max_component();
                            let pdf_area = weight / (scene.total_light_weight * light.area);
                            let geometry = cos_s * cos_l / dist2;
                            radiance += throughput
                                .mul_elem(diffuse_brdf(albedo))
                                .mul_elem(emit)
                                * (g * geometry / pdf_area);
                        }
                    }
                }
            }
        }

        // Cosine-weighted bounce: f * cos / pdf collapses to the albedo.
        let (u1, u2) = (rng.next_f64(), rng.next_f64());
        throughput = throughput.mul_elem(albedo);
        if throughput.max_component() <= 0.0 {
            break;
        }
        if depth + 1 > RR_START {
            let survive = throughput.max_component().clamp(RR_FLOOR, 1.0);
            if rng.next_f64() >= survive {
                break;
            }
            throughput = throughput / survive;
        }
        dir = cosine_sample_hemisphere(shade_n, u1, u2);
        origin = offset_origin(point, shade_n);
    }
    radiance
}

/// Renders the half-open row range [row_start, row_end) into a flat buffer of
/// XYZ pixels. Exposed so callers can parallelize over rows; the result is
/// identical for any partitioning. Returns the pixels and the count of
/// non-finite samples that were zeroed.
pub fn render_rows(
    scene: &Scene,
    settings: &RenderSettings,
    row_start: usize,
    row_end: usize,
) -> (Vec<Vec3>, u64) {
    let mut out = Vec::with_capacity((row_end - row_start) * settings.width);
    let mut bad: u64 = 0;
    let spp = settings.samples_per_pixel.max(1);
    let path_stream = fnv1a(b"path");
    for y in row_start..row_end {
        for x in 0..settings.width {
            let pixel_index = (y * settings.width + x) as u64;
            let mut acc = Vec3::ZERO;
            for s in 0..spp {
                let stream = fnv1a_extend(
                    fnv1a_extend(path_stream, &pixel_index.to_le_bytes()),
                    &(s as u64).to_le_bytes(),
                );
                let mut rng = RngStream::new(settings.seed, stream);
                let (ju, jv) = if settings.jitter {
                    (rng.next_f64(), rng.next_f64())
                } else {
                    (0.5, 0.5)
                };
                let u = x as f64 + ju;
                let v = y as f64 + jv;
                let dir = settings.intrinsics.ray_direction(u, v);
                let sample = trace_path(scene, settings, Vec3::ZERO, dir, &mut rng);
                if sample.is_finite() {
                    acc += sample;
                } else {
                    bad += 1;
                }
            }
            out.push(acc / spp as f64);
        }
    }
    (out, bad)
}

/// Renders the whole frame single-threaded.
pub fn render(scene: &Scene, settings: &RenderSettings) -> Result<LinearImage, CoreError> {
    let (pixels, bad) = render_rows(scene, settings, 0, settings.height);
    let total = settings.width as u64 * settings.height as u64 * settings.samples_per_pixel as u64;
    finish_image(pixels, bad, total, settings)
}

/// Assembles row results produced by [`render_rows`] into the final image.
pub fn finish_image(
    pixels: Vec<Vec3>,
    bad_samples: u64,
    total_samples: u64,
    settings: &RenderSettings,
) -> Result<LinearImage, CoreError> {
    if bad_samples * 1000 > total_samples {
        return Err(CoreError::RadianceNonFinite { bad: bad_samples, total: total_samples });
    }
    let mut raster = Raster::new(settings.width, settings.height, 3);
    for (i, p) in pixels.iter().enumerate() {
        let (x, y) = (i % settings.width, i / settings.width);
        raster.set_vec3(x, y, *p);
    }
    Ok(LinearImage {
        pixels: raster,
        samples_per_pixel: settings.samples_per_pixel,
        seed: settings.seed,
    })
}
