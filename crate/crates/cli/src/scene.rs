//! Scene manifest parsing, input validation, and resampling of the dense maps
//! to the daytime image's resolution.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use solo_core::camera::Intrinsics;
use solo_core::lights::{InstanceClass, LightCategory, LightMask};
use solo_core::pipeline::SceneInputs;
use solo_core::raster::Raster;
use solo_core::resample::{self, GuideChannel};

use crate::error::SceneError;
use crate::{pfm, png_io};

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct IntrinsicsSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

/// On-disk description of one scene: file paths are relative to the manifest.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct SceneManifest {
    #[serde(default)]
    pub id: Option<String>,
    pub daytime_image: PathBuf,
    pub depth: PathBuf,
    pub normals: PathBuf,
    pub albedo: PathBuf,
    #[serde(default)]
    pub roughness: Option<PathBuf>,
    pub instance_mask: PathBuf,
    pub light_mask: PathBuf,
    pub intrinsics: IntrinsicsSpec,
    /// Maps instance ids to semantic classes ("car", "building", ...).
    #[serde(default)]
    pub instance_classes: BTreeMap<u16, String>,
    #[serde(default)]
    pub sky_instance_id: Option<u16>,
}

/// Fully loaded and validated scene: core inputs plus the daytime image.
pub struct SceneBundle {
    pub id: String,
    pub daytime: Raster,
    pub inputs: SceneInputs,
}

#[derive(Clone, Copy, Debug)]
pub struct UpsampleOptions {
    pub sigma_range: f64,
    pub guide: GuideChannel,
}

impl Default for UpsampleOptions {
    fn default() -> Self {
        UpsampleOptions { sigma_range: 0.1, guide: GuideChannel::Luma }
    }
}

fn resolve(base: &Path, rel: &Path) -> PathBuf {
    if rel.is_absolute() {
        rel.to_path_buf()
    } else {
        base.join(rel)
    }
}

fn require(path: &Path) -> Result<(), SceneError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(SceneError::MissingFile(path.to_path_buf()))
    }
}

pub fn load_manifest(path: &Path) -> Result<SceneManifest, SceneError> {
    require(path)?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))
}

/// Loads, validates, and resamples every input of the scene.
///
/// Geometric maps (depth, normals) are brought to the daytime resolution with
/// bilinear interpolation (normals re-normalized); the albedo map uses joint
/// bilateral upsampling guided by the daytime image. Masks must already match
/// the daytime resolution. Roughness is loaded and validated, then dropped:
/// the renderer is diffuse-only.
pub fn load_scene_bundle(manifest_path: &Path, options: &UpsampleOptions) -> Result<SceneBundle, SceneError> {
    let manifest = load_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let id = manifest.id.clone().unwrap_or_else(|| {
        manifest_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or("scene".into())
    });

    let day_path = resolve(&base, &manifest.daytime_image);
    require(&day_path)?;
    let daytime = png_io::read_rgb8(&day_path)?;
    let (w, h) = (daytime.width(), daytime.height());

    let intr = Intrinsics::new(
        manifest.intrinsics.fx,
        manifest.intrinsics.fy,
        manifest.intrinsics.cx,
        manifest.intrinsics.cy,
    );
    if !intr.is_valid() {
        return Err(SceneError::InvalidIntrinsics);
    }

    // Depth: positive, finite, bilinear to full resolution.
    let depth_path = resolve(&base, &manifest.depth);
    require(&depth_path)?;
    let depth_raw = pfm::read_pfm(&depth_path)?;
    if !depth_raw.is_finite() {
        return Err(SceneError::NonFinite("depth"));
    }
    if depth_raw.min_value() <= 0.0 {
        return Err(SceneError::NonPositiveDepth);
    }
    let depth = if (depth_raw.width(), depth_raw.height()) == (w, h) {
        depth_raw
    } else {
        resample::bilinear_upsample(&depth_raw, w, h)?
    };

    // Normals: finite, close to unit length, re-normalized after resampling.
    let normals_path = resolve(&base, &manifest.normals);
    require(&normals_path)?;
    let normals_raw = pfm::read_pfm(&normals_path)?;
    if !normals_raw.is_finite() {
        return Err(SceneError::NonFinite("normals"));
    }
    for y in 0..normals_raw.height() {
        for x in 0..normals_raw.width() {
            let n = normals_raw.get_vec3(x, y);
            let len = n.length();
            if (len - 1.0).abs() > 1e-2 {
                return Err(SceneError::NonUnitNormals(len));
            }
        }
    }
    let mut normals = if (normals_raw.width(), normals_raw.height()) == (w, h) {
        normals_raw
    } else {
        resample::bilinear_upsample(&normals_raw, w, h)?
    };
    resample::renormalize_vectors(&mut normals);

    // Albedo: [0, 1], joint-bilateral upsampled under the daytime guide.
    let albedo_path = resolve(&base, &manifest.albedo);
    require(&albedo_path)?;
    let mut albedo_raw = pfm::read_pfm(&albedo_path)?;
    if !albedo_raw.is_finite() {
        return Err(SceneError::NonFinite("albedo"));
    }
    let (lo, hi) = (albedo_raw.min_value(), albedo_raw.max_value());
    if lo < -1e-3 || hi > 1.0 + 1e-3 {
        return Err(SceneError::AlbedoOutOfRange(if lo < -1e-3 { lo } else { hi }));
    }
    albedo_raw.map_in_place(|v| v.clamp(0.0, 1.0));
    let albedo = if (albedo_raw.width(), albedo_raw.height()) == (w, h) {
        albedo_raw
    } else {
        let factor = (w as f64 / albedo_raw.width() as f64).max(h as f64 / albedo_raw.height() as f64);
        resample::joint_bilateral_upsample(
            &albedo_raw,
            &daytime,
            factor.max(1.0),
            options.sigma_range,
            options.guide,
        )?
    };

    // Roughness: validated then ignored by the diffuse renderer.
    if let Some(rel) = &manifest.roughness {
        let path = resolve(&base, rel);
        require(&path)?;
        let roughness = pfm::read_pfm(&path)?;
        if !roughness.is_finite() {
            return Err(SceneError::NonFinite("roughness"));
        }
        if roughness.min_value() < -1e-3 || roughness.max_value() > 1.0 + 1e-3 {
            return Err(SceneError::AlbedoOutOfRange(roughness.max_value()));
        }
    }

    // Masks must share the daytime dimensions.
    let inst_path = resolve(&base, &manifest.instance_mask);
    require(&inst_path)?;
    let instance_mask = png_io::read_mask16(&inst_path)?;
    if (instance_mask.width(), instance_mask.height()) != (w, h) {
        return Err(SceneError::DimensionMismatch {
            map: "instance_mask",
            expected: (w, h),
            got: (instance_mask.width(), instance_mask.height()),
        });
    }
    let light_path = resolve(&base, &manifest.light_mask);
    require(&light_path)?;
    let (categories, instances) = png_io::read_light_mask16(&light_path)?;
    if (categories.width(), categories.height()) != (w, h) {
        return Err(SceneError::DimensionMismatch {
            map: "light_mask",
            expected: (w, h),
            got: (categories.width(), categories.height()),
        });
    }
    for &id in categories.data() {
        if id != 0 && LightCategory::from_id(id).is_none() {
            return Err(SceneError::UnknownLightCategory(id));
        }
    }

    let instance_classes = manifest
        .instance_classes
        .iter()
        .map(|(id, name)| (*id, InstanceClass::parse(name)))
        .collect();

    Ok(SceneBundle {
        id,
        daytime,
        inputs: SceneInputs {
            depth,
            normals,
            albedo,
            instance_mask,
            light_mask: LightMask { categories, instances },
            instance_classes,
            sky_instance: manifest.sky_instance_id,
            intrinsics: intr,
        },
    })
}
