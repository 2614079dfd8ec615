//! Deterministic synthetic street scene used by the demos and the end-to-end
//! tests: a road, two building walls with windows, a parked car with two front
//! lights, a street light, and a sky region.

use std::path::Path;

use solo_core::camera::Intrinsics;
use solo_core::lights::LightCategory;
use solo_core::math::Vec3;
use solo_core::raster::{IdMask, Raster};

use crate::error::SceneError;
use crate::scene::{IntrinsicsSpec, SceneManifest};
use crate::{pfm, png_io};

const INSTANCE_SKY: u16 = 1;
const INSTANCE_BUILDING_L: u16 = 2;
const INSTANCE_BUILDING_R: u16 = 3;
const INSTANCE_CAR: u16 = 4;
const INSTANCE_POLE: u16 = 5;

struct SceneMaps {
    depth: Raster,
    normals: Raster,
    albedo: Raster,
    instances: IdMask,
    light_categories: IdMask,
    light_instances: IdMask,
}

fn paint(size: usize) -> SceneMaps {
    let n = size;
    let s = size as f64 / 64.0; // geometry scales with resolution
    let k = Intrinsics::new(n as f64, n as f64, n as f64 / 2.0 - 0.5, n as f64 / 2.0 - 0.5);

    let sky_depth = 60.0;
    let mut depth = Raster::constant(n, n, 1, sky_depth);
    let mut normals = Raster::new(n, n, 3);
    let mut albedo = Raster::new(n, n, 3);
    let mut instances = IdMask::new(n, n);
    let mut light_categories = IdMask::new(n, n);
    let mut light_instances = IdMask::new(n, n);

    for y in 0..n {
        for x in 0..n {
            // Sky by default.
            normals.set_vec3(x, y, Vec3::new(0.0, 0.0, -1.0));
            albedo.set_vec3(x, y, Vec3::new(0.35, 0.45, 0.65));
            instances.set(x, y, INSTANCE_SKY);

            let u = x as f64;
            let v = y as f64;

            // Ground plane y = +1.5 m (y points down) on the lower rows.
            if v > k.cy + 4.0 * s {
                let z = 1.5 * k.fy / (v - k.cy);
                depth.set(x, y, 0, z);
                normals.set_vec3(x, y, Vec3::new(0.0, -1.0, 0.0));
                let lane_mark = x.abs_diff(n / 2) <= (s.ceil() as usize).max(1) && (y / 4) % 2 == 0;
                let gray = if lane_mark { 0.7 } else { 0.25 };
                albedo.set_vec3(x, y, Vec3::splat(gray));
                instances.set(x, y, 0);
            }

            // Left building wall x = -2.2 m.
            if u < k.cx - 11.0 * s && v >= 8.0 * s && v < k.cy + 15.0 * s {
                let z = -2.2 * k.fx / (u - k.cx);
                if z > 0.0 && z < depth.get(x, y, 0) {
                    depth.set(x, y, 0, z);
                    normals.set_vec3(x, y, Vec3::new(1.0, 0.0, 0.0));
                    albedo.set_vec3(x, y, Vec3::new(0.45, 0.38, 0.30));
                    instances.set(x, y, INSTANCE_BUILDING_L);
                }
            }

            // Right building wall x = +2.5 m.
            if u > k.cx + 12.0 * s && v >= 6.0 * s && v < k.cy + 14.0 * s {
                let z = 2.5 * k.fx / (u - k.cx);
                if z > 0.0 && z < depth.get(x, y, 0) {
                    depth.set(x, y, 0, z);
                    normals.set_vec3(x, y, Vec3::new(-1.0, 0.0, 0.0));
                    albedo.set_vec3(x, y, Vec3::new(0.36, 0.34, 0.33));
                    instances.set(x, y, INSTANCE_BUILDING_R);
                }
            }
        }
    }

    // Parked car: a fronto-parallel slab at z = 6 m.
    let car = |f: f64| (f * s).round() as usize;
    for y in car(34.0)..car(46.0) {
        for x in car(26.0)..car(42.0) {
            depth.set(x, y, 0, 6.0);
            normals.set_vec3(x, y, Vec3::new(0.0, 0.0, -1.0));
            albedo.set_vec3(x, y, Vec3::new(0.45, 0.10, 0.08));
            instances.set(x, y, INSTANCE_CAR);
        }
    }
    // Two front lights near the car's lower corners.
    let mut lamp = |x0: usize, x1: usize, instance: u16| {
        for y in car(41.0)..car(44.0) {
            for x in x0..x1 {
                light_categories.set(x, y, LightCategory::FrontLight.id());
                light_instances.set(x, y, instance);
                albedo.set_vec3(x, y, Vec3::new(0.7, 0.7, 0.6));
            }
        }
    };
    lamp(car(27.0), car(30.0), 1);
    lamp(car(38.0), car(41.0), 2);

    // Street light head on a pole (no enclosing instance class).
    for y in car(6.0)..car(10.0) {
        for x in car(21.0)..car(25.0) {
            depth.set(x, y, 0, 9.0);
            normals.set_vec3(x, y, Vec3::new(0.0, 0.0, -1.0));
            albedo.set_vec3(x, y, Vec3::new(0.8, 0.8, 0.75));
            instances.set(x, y, INSTANCE_POLE);
            light_categories.set(x, y, LightCategory::StreetLightHt.id());
            light_instances.set(x, y, 3);
        }
    }
    for y in car(10.0)..car(40.0) {
        for x in car(22.0)..car(24.0) {
            depth.set(x, y, 0, 9.0);
            normals.set_vec3(x, y, Vec3::new(0.0, 0.0, -1.0));
            albedo.set_vec3(x, y, Vec3::splat(0.2));
            instances.set(x, y, INSTANCE_POLE);
        }
    }

    // Windows on the left building: two floors of two windows each.
    let mut window = |x0: usize, y0: usize, instance: u16| {
        for y in y0..y0 + car(4.0) {
            for x in x0..x0 + car(4.0) {
                if instances.get(x, y) == INSTANCE_BUILDING_L {
                    light_categories.set(x, y, LightCategory::WindowBuilding.id());
                    light_instances.set(x, y, 10 + instance);
                    albedo.set_vec3(x, y, Vec3::new(0.25, 0.22, 0.18));
                }
            }
        }
    };
    window(car(2.0), car(12.0), 1);
    window(car(9.0), car(12.0), 2);
    window(car(2.0), car(26.0), 3);
    window(car(9.0), car(26.0), 4);

    SceneMaps { depth, normals, albedo, instances, light_categories, light_instances }
}

/// Writes the synthetic scene bundle into `dir` and returns the manifest path.
/// The daytime image is derived from the albedo (gamma-encoded), which gives
/// the joint bilateral upsampler a structure-correlated guide; the albedo map
/// itself is stored at half resolution to exercise the resampling path.
pub fn write_demo_scene(dir: &Path, size: usize) -> Result<std::path::PathBuf, SceneError> {
    assert!(size >= 32 && size % 2 == 0, "demo scene size must be even and at least 32");
    std::fs::create_dir_all(dir).map_err(|e| SceneError::Manifest(format!("{}: {e}", dir.display())))?;
    let maps = paint(size);

    // Daytime image: gamma-encoded albedo with a sky gradient.
    let mut day = Vec::with_capacity(size * size * 3);
    for y in 0..size {
        for x in 0..size {
            let a = maps.albedo.get_vec3(x, y);
            let sky = maps.instances.get(x, y) == INSTANCE_SKY;
            for c in [a.x, a.y, a.z] {
                let v = if sky { c + 0.25 * (1.0 - y as f64 / size as f64) } else { c };
                day.push((v.clamp(0.0, 1.0).powf(1.0 / 2.2) * 255.0).round() as u8);
            }
        }
    }
    png_io::write_rgb8(&dir.join("daytime.png"), size, size, &day)?;

    pfm::write_pfm(&dir.join("depth.pfm"), &maps.depth)?;
    pfm::write_pfm(&dir.join("normals.pfm"), &maps.normals)?;

    // Half-resolution albedo (box-filtered).
    let half = size / 2;
    let mut albedo_half = Raster::new(half, half, 3);
    for y in 0..half {
        for x in 0..half {
            let mut acc = Vec3::ZERO;
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                acc += maps.albedo.get_vec3(2 * x + dx, 2 * y + dy);
            }
            albedo_half.set_vec3(x, y, acc * 0.25);
        }
    }
    pfm::write_pfm(&dir.join("albedo.pfm"), &albedo_half)?;

    png_io::write_mask16(&dir.join("instances.png"), &maps.instances)?;
    png_io::write_light_mask16(&dir.join("lights.png"), &maps.light_categories, &maps.light_instances)?;

    let manifest = SceneManifest {
        id: Some(format!("demo{size}")),
        daytime_image: "daytime.png".into(),
        depth: "depth.pfm".into(),
        normals: "normals.pfm".into(),
        albedo: "albedo.pfm".into(),
        roughness: None,
        instance_mask: "instances.png".into(),
        light_mask: "lights.png".into(),
        intrinsics: IntrinsicsSpec {
            fx: size as f64,
            fy: size as f64,
            cx: size as f64 / 2.0 - 0.5,
            cy: size as f64 / 2.0 - 0.5,
        },
        instance_classes: [
            (INSTANCE_SKY, "sky".to_string()),
            (INSTANCE_BUILDING_L, "building".to_string()),
            (INSTANCE_BUILDING_R, "building".to_string()),
            (INSTANCE_CAR, "car".to_string()),
            (INSTANCE_POLE, "pole".to_string()),
        ]
        .into_iter()
        .collect(),
        sky_instance_id: Some(INSTANCE_SKY),
    };
    let path = dir.join("scene.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("serializes"))
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{load_scene_bundle, UpsampleOptions};

    #[test]
    fn demo_scene_loads_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_demo_scene(dir.path(), 64).unwrap();
        let bundle = load_scene_bundle(&manifest, &UpsampleOptions::default()).unwrap();
        assert_eq!(bundle.inputs.depth.width(), 64);
        assert_eq!(bundle.inputs.albedo.width(), 64); // upsampled from 32
        assert!(bundle.inputs.depth.min_value() > 0.0);
        // The scene carries the expected light sources.
        let cats = bundle.inputs.light_mask.categories.data();
        assert!(cats.iter().any(|&c| c == LightCategory::FrontLight.id()));
        assert!(cats.iter().any(|&c| c == LightCategory::StreetLightHt.id()));
        assert!(cats.iter().any(|&c| c == LightCategory::WindowBuilding.id()));
    }

    #[test]
    fn demo_scene_is_byte_deterministic() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_demo_scene(d1.path(), 64).unwrap();
        write_demo_scene(d2.path(), 64).unwrap();
        for name in ["daytime.png", "depth.pfm", "normals.pfm", "albedo.pfm", "instances.png", "lights.png"] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }
}
