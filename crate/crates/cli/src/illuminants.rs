//! `solo illuminants build`: turn a directory of gray-card captures into the
//! per-category chromaticity database.
//!
//! Each capture is a 16-bit PGM mosaic next to a JSON sidecar carrying the
//! metadata a DNG would: Bayer pattern, black/white levels, the camera-to-XYZ
//! matrix, the active sensor area, and the annotated card region.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use solo_core::color::Chromaticity;
use solo_core::illuminant::{process_capture, BayerPattern, RawCapture, Rect};
use solo_core::lights::IlluminantDb;
use solo_core::math::Mat3;

use crate::error::SceneError;
use crate::pgm;

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct CaptureMeta {
    /// Mosaic file, relative to this sidecar.
    pub pgm: PathBuf,
    /// "RGGB", "BGGR", "GRBG", or "GBRG".
    pub pattern: String,
    pub black_level: u16,
    pub white_level: u16,
    /// Row-major camera-to-XYZ matrix.
    pub camera_to_xyz: [[f64; 3]; 3],
    /// [x0, y0, x1, y1], exclusive end, full-mosaic coordinates.
    pub active_area: [usize; 4],
    /// Annotated gray-card rectangle, full-mosaic coordinates.
    pub region: [usize; 4],
    /// Light-source category this capture samples.
    pub category: String,
}

pub fn load_capture(meta_path: &Path) -> Result<(RawCapture, String), SceneError> {
    let text = std::fs::read_to_string(meta_path)
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", meta_path.display())))?;
    let meta: CaptureMeta = serde_json::from_str(&text)
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", meta_path.display())))?;
    let base = meta_path.parent().unwrap_or(Path::new("."));
    let pgm_path = if meta.pgm.is_absolute() { meta.pgm.clone() } else { base.join(&meta.pgm) };
    let mosaic = pgm::read_pgm16(&pgm_path)?;
    let rect = |r: [usize; 4]| Rect { x0: r[0], y0: r[1], x1: r[2], y1: r[3] };
    let capture = RawCapture {
        width: mosaic.width,
        height: mosaic.height,
        mosaic: mosaic.samples,
        pattern: BayerPattern::parse(&meta.pattern)?,
        black_level: meta.black_level,
        white_level: meta.white_level,
        camera_to_xyz: Mat3::from_rows(meta.camera_to_xyz),
        active_area: rect(meta.active_area),
        region: rect(meta.region),
    };
    Ok((capture, meta.category))
}

/// Processes every `*.json` sidecar under `dir` (sorted by name, so the
/// output is deterministic) into an illuminant database.
pub fn build_database(dir: &Path) -> Result<(IlluminantDb, usize), SceneError> {
    let mut sidecars: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    sidecars.sort();

    let mut samples: BTreeMap<String, Vec<Chromaticity>> = BTreeMap::new();
    for sidecar in &sidecars {
        let (capture, category) = load_capture(sidecar)?;
        let chroma = process_capture(&capture)?;
        samples.entry(category).or_default().push(chroma);
    }
    Ok((IlluminantDb { samples }, sidecars.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use solo_core::math::Vec3;

    #[test]
    fn build_from_synthetic_captures() {
        let dir = tempfile::tempdir().unwrap();
        let matrix = Mat3::from_rows([[0.7, 0.2, 0.1], [0.25, 0.65, 0.1], [0.05, 0.15, 0.8]]);
        let injected = [
            ("street_light_LT", Chromaticity::new(0.50, 0.42)),
            ("street_light_LT", Chromaticity::new(0.48, 0.41)),
            ("front_light", Chromaticity::new(0.42, 0.39)),
        ];
        for (i, (category, chroma)) in injected.iter().enumerate() {
            let raw = solo_core::illuminant::synthesize_capture(
                *chroma,
                0.2,
                matrix,
                Vec3::splat(1.0),
                BayerPattern::Rggb,
                16,
                16,
                256,
                16383,
            );
            let pgm_path = dir.path().join(format!("cap{i}.pgm"));
            pgm::write_pgm16(&pgm_path, raw.width, raw.height, &raw.mosaic).unwrap();
            let meta = CaptureMeta {
                pgm: PathBuf::from(format!("cap{i}.pgm")),
                pattern: "RGGB".into(),
                black_level: raw.black_level,
                white_level: raw.white_level,
                camera_to_xyz: raw.camera_to_xyz.rows,
                active_area: [0, 0, 16, 16],
                region: [2, 2, 14, 14],
                category: category.to_string(),
            };
            std::fs::write(
                dir.path().join(format!("cap{i}.json")),
                serde_json::to_string(&meta).unwrap(),
            )
            .unwrap();
        }

        let (db, count) = build_database(dir.path()).unwrap();
        assert_eq!(count, 3);
        assert_eq!(db.samples["street_light_LT"].len(), 2);
        assert_eq!(db.samples["front_light"].len(), 1);
        let got = db.samples["front_light"][0];
        assert!((got.x - 0.42).abs() < 0.005);
        assert!((got.y - 0.39).abs() < 0.005);
    }
}
