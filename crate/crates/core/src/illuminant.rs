//! Gray-card raw capture processing: normalization, illuminant-E white
//! balance, bilinear demosaicing, camera-to-XYZ transform, and region-mean
//! chromaticity. Populates the per-category illuminant database.

use alloc::vec::Vec;

use crate::color::Chromaticity;
use crate::error::CoreError;
use crate::fmath;
use crate::math::{Mat3, Vec3};
use crate::raster::Raster;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BayerPattern {
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfaChannel {
    R,
    G,
    B,
}

impl BayerPattern {
    pub fn parse(tag: &str) -> Result<BayerPattern, CoreError> {
        match tag {
            "RGGB" => Ok(BayerPattern::Rggb),
            "BGGR" => Ok(BayerPattern::Bggr),
            "GRBG" => Ok(BayerPattern::Grbg),
            "GBRG" => Ok(BayerPattern::Gbrg),
            _ => Err(CoreError::UnknownBayerPattern),
        }
    }

    /// 2x2 CFA tile in row-major order.
    fn tile(self) -> [CfaChannel; 4] {
        use CfaChannel::*;
        match self {
            BayerPattern::Rggb => [R, G, G, B],
            BayerPattern::Bggr => [B, G, G, R],
            BayerPattern::Grbg => [G, R, B, G],
            BayerPattern::Gbrg => [G, B, R, G],
        }
    }

    #[inline]
    pub fn channel_at(self, x: usize, y: usize) -> CfaChannel {
        self.tile()[(y % 2) * 2 + (x % 2)]
    }

    /// The pattern seen after cropping (dx, dy) pixels off the origin.
    pub fn shifted(self, dx: usize, dy: usize) -> BayerPattern {
        let t = self.tile();
        let pick = |x: usize, y: usize| t[((y + dy) % 2) * 2 + (x + dx) % 2];
        let new = [pick(0, 0), pick(1, 0), pick(0, 1), pick(1, 1)];
        use CfaChannel::*;
        match new {
            [R, G, G, B] => BayerPattern::Rggb,
            [B, G, G, R] => BayerPattern::Bggr,
            [G, R, B, G] => BayerPattern::Grbg,
            [G, B, R, G] => BayerPattern::Gbrg,
            _ => unreachable!("shift of a Bayer tile is a Bayer tile"),
        }
    }
}

/// Pixel rectangle, inclusive origin and exclusive end.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn width(&self) -> usize {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> usize {
        self.y1.saturating_sub(self.y0)
    }

    pub fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }

    pub fn contains(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.y0 >= self.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }
}

/// One gray-card capture: the Bayer mosaic plus the metadata needed to
/// linearize it and reach XYZ.
#[derive(Clone, Debug)]
pub struct RawCapture {
    pub width: usize,
    pub height: usize,
    pub mosaic: Vec<u16>,
    pub pattern: BayerPattern,
    pub black_level: u16,
    pub white_level: u16,
    /// Maps raw camera RGB to CIE XYZ.
    pub camera_to_xyz: Mat3,
    /// Portion of the sensor that carries image data.
    pub active_area: Rect,
    /// Annotated gray-card region, in full-mosaic coordinates.
    pub region: Rect,
}

/// (counts - black) / (white - black), clamped to [0, 1], active area cropped.
/// Returns the linear mosaic, the Bayer pattern of the crop, and the card
/// region in cropped coordinates.
pub fn normalize_raw(raw: &RawCapture) -> Result<(Raster, BayerPattern, Rect), CoreError> {
    if raw.white_level <= raw.black_level {
        return Err(CoreError::InvalidRawLevels { black: raw.black_level, white: raw.white_level });
    }
    let frame = Rect { x0: 0, y0: 0, x1: raw.width, y1: raw.height };
    if raw.active_area.is_empty() || !frame.contains(&raw.active_area) {
        return Err(CoreError::EmptyRegion);
    }
    if raw.region.is_empty() || !raw.active_area.contains(&raw.region) {
        return Err(CoreError::EmptyRegion);
    }
    let (w, h) = (raw.active_area.width(), raw.active_area.height());
    let black = raw.black_level as f64;
    let range = (raw.white_level - raw.black_level) as f64;
    let mut out = Raster::new(w, h, 1);
    for y in 0..h {
        for x in 0..w {
            let sx = raw.active_area.x0 + x;
            let sy = raw.active_area.y0 + y;
            let counts = raw.mosaic[sy * raw.width + sx] as f64;
            out.set(x, y, 0, ((counts - black) / range).clamp(0.0, 1.0));
        }
    }
    let pattern = raw.pattern.shifted(raw.active_area.x0, raw.active_area.y0);
    let region = Rect {
        x0: raw.region.x0 - raw.active_area.x0,
        y0: raw.region.y0 - raw.active_area.y0,
        x1: raw.region.x1 - raw.active_area.x0,
        y1: raw.region.y1 - raw.active_area.y0,
    };
    Ok((out, pattern, region))
}

/// Per-channel gains that map the camera's response to illuminant E onto
/// equal RGB: g = 1 / (M^-1 * (1, 1, 1)).
pub fn white_balance_gains(camera_to_xyz: Mat3) -> Result<Vec3, CoreError> {
    let inv = camera_to_xyz.inverse().ok_or(CoreError::SingularCameraMatrix)?;
    let response = inv.mul_vec(Vec3::splat(1.0));
    if response.x == 0.0 || response.y == 0.0 || response.z == 0.0 {
        return Err(CoreError::DegenerateWhitePoint);
    }
    Ok(Vec3::new(1.0 / response.x, 1.0 / response.y, 1.0 / response.z))
}

/// Scales every mosaic sample by the gain of its CFA channel.
pub fn white_balance_e(mosaic: &mut Raster, pattern: BayerPattern, gains: Vec3) {
    for y in 0..mosaic.height() {
        for x in 0..mosaic.width() {
            let g = match pattern.channel_at(x, y) {
                CfaChannel::R => gains.x,
                CfaChannel::G => gains.y,
                CfaChannel::B => gains.z,
            };
            let v = mosaic.get(x, y, 0) * g;
            mosaic.set(x, y, 0, v);
        }
    }
}

/// Standard bilinear CFA interpolation: each missing channel is the mean of
/// the same-channel samples in the 3x3 neighborhood (coordinates clamped).
pub fn demosaic_bilinear(mosaic: &Raster, pattern: BayerPattern) -> Raster {
    let (w, h) = (mosaic.width(), mosaic.height());
    let mut out = Raster::new(w, h, 3);
    for y in 0..h {
        for x in 0..w {
            let mut sums = [0.0f64; 3];
            let mut counts = [0u32; 3];
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                    let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                    let c = match pattern.channel_at(sx, sy) {
                        CfaChannel::R => 0,
                        CfaChannel::G => 1,
                        CfaChannel::B => 2,
                    };
                    sums[c] += mosaic.get(sx, sy, 0);
                    counts[c] += 1;
                }
            }
            let own = pattern.channel_at(x, y);
            let own_index = match own {
                CfaChannel::R => 0,
                CfaChannel::G => 1,
                CfaChannel::B => 2,
            };
            for c in 0..3 {
                let v = if c == own_index {
                    mosaic.get(x, y, 0)
                } else if counts[c] > 0 {
                    sums[c] / counts[c] as f64
                } else {
                    0.0
                };
                out.set(x, y, c, v);
            }
        }
    }
    out
}

/// Per-pixel 3x3 matrix multiply.
pub fn camera_to_xyz(rgb: &Raster, matrix: Mat3) -> Raster {
    debug_assert_eq!(rgb.channels(), 3);
    let mut out = rgb.clone();
    for y in 0..out.height() {
        for x in 0..out.width() {
            let v = out.get_vec3(x, y);
            out.set_vec3(x, y, matrix.mul_vec(v));
        }
    }
    out
}

/// Mean XYZ over the region, reduced to chromaticity coordinates.
pub fn compute_chromaticity(xyz: &Raster, region: Rect) -> Result<Chromaticity, CoreError> {
    let frame = Rect { x0: 0, y0: 0, x1: xyz.width(), y1: xyz.height() };
    if region.is_empty() || !frame.contains(&region) {
        return Err(CoreError::EmptyRegion);
    }
    let mut mean = Vec3::ZERO;
    for y in region.y0..region.y1 {
        for x in region.x0..region.x1 {
            mean += xyz.get_vec3(x, y);
        }
    }
    mean = mean / ((region.width() * region.height()) as f64);
    Chromaticity::from_xyz(mean).ok_or(CoreError::ZeroSumMean)
}

/// Full capture-to-chromaticity pipeline.
///
/// After the mosaic is balanced for illuminant E, the metadata matrix is
/// re-expressed for balanced inputs (columns scaled by the inverse gains), so
/// white balance and the color transform compose to the calibrated raw-to-XYZ
/// map regardless of per-channel sensor scaling.
pub fn process_capture(raw: &RawCapture) -> Result<Chromaticity, CoreError> {
    let (mut mosaic, pattern, region) = normalize_raw(raw)?;
    let gains = white_balance_gains(raw.camera_to_xyz)?;
    white_balance_e(&mut mosaic, pattern, gains);
    let rgb = demosaic_bilinear(&mosaic, pattern);
    let balanced_matrix = raw
        .camera_to_xyz
        .mul_mat(Mat3::diagonal(Vec3::new(1.0 / gains.x, 1.0 / gains.y, 1.0 / gains.z)));
    let xyz = camera_to_xyz(&rgb, balanced_matrix);
    compute_chromaticity(&xyz, region)
}

/// Synthesizes a gray-card capture under a known illuminant; the validation
/// oracle for the processing chain. `exposure` scales the card's linear
/// response (0, 1]; `sensor_gains` models per-channel sensitivity and is
/// folded into the metadata matrix the way a calibrated camera would report it.
pub fn synthesize_capture(
    illuminant: Chromaticity,
    exposure: f64,
    base_matrix: Mat3,
    sensor_gains: Vec3,
    pattern: BayerPattern,
    width: usize,
    height: usize,
    black_level: u16,
    white_level: u16,
) -> RawCapture {
    let xyz = illuminant.to_xyz(exposure);
    let raw_rgb = base_matrix
        .inverse()
        .expect("synthetic camera matrix must be invertible")
        .mul_vec(xyz);
    let response = Vec3::new(
        raw_rgb.x * sensor_gains.x,
        raw_rgb.y * sensor_gains.y,
        raw_rgb.z * sensor_gains.z,
    );
    let range = (white_level - black_level) as f64;
    let mut mosaic = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let v = match pattern.channel_at(x, y) {
                CfaChannel::R => response.x,
                CfaChannel::G => response.y,
                CfaChannel::B => response.z,
            };
            let counts = black_level as f64 + v.clamp(0.0, 1.0) * range;
            mosaic.push(fmath::floor(counts + 0.5) as u16);
        }
    }
    let metadata_matrix = base_matrix.mul_mat(Mat3::diagonal(Vec3::new(
        1.0 / sensor_gains.x,
        1.0 / sensor_gains.y,
        1.0 / sensor_gains.z,
    )));
    RawCapture {
        width,
        height,
        mosaic,
        pattern,
        black_level,
        white_level,
        camera_to_xyz: metadata_matrix,
        active_area: Rect { x0: 0, y0: 0, x1: width, y1: height },
        region: Rect { x0: 2, y0: 2, x1: width - 2, y1: height - 2 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn plain_capture(mosaic_value: u16) -> RawCapture {
        RawCapture {
            width: 8,
            height: 8,
            mosaic: alloc::vec![mosaic_value; 64],
            pattern: BayerPattern::Rggb,
            black_level: 256,
            white_level: 4096,
            camera_to_xyz: Mat3::IDENTITY,
            active_area: Rect { x0: 0, y0: 0, x1: 8, y1: 8 },
            region: Rect { x0: 2, y0: 2, x1: 6, y1: 6 },
        }
    }

    #[test]
    fn normalization_floor_ceiling_midpoint() {
        let (floor, _, _) = normalize_raw(&plain_capture(256)).unwrap();
        assert!(floor.data().iter().all(|&v| v == 0.0));
        let (ceil, _, _) = normalize_raw(&plain_capture(4096)).unwrap();
        assert!(ceil.data().iter().all(|&v| v == 1.0));
        let (mid, _, _) = normalize_raw(&plain_capture(2176)).unwrap();
        assert!(mid.data().iter().all(|&v| (v - 0.5).abs() <= f64::EPSILON));
    }

    #[test]
    fn inverted_levels_are_rejected() {
        let mut raw = plain_capture(100);
        raw.white_level = 100;
        raw.black_level = 200;
        assert!(matches!(normalize_raw(&raw), Err(CoreError::InvalidRawLevels { .. })));
    }

    #[test]
    fn active_area_crop_shifts_pattern() {
        let mut raw = plain_capture(1000);
        raw.active_area = Rect { x0: 1, y0: 0, x1: 7, y1: 8 };
        raw.region = Rect { x0: 2, y0: 2, x1: 6, y1: 6 };
        let (_, pattern, region) = normalize_raw(&raw).unwrap();
        assert_eq!(pattern, BayerPattern::Grbg);
        assert_eq!(region, Rect { x0: 1, y0: 2, x1: 5, y1: 6 });
    }

    #[test]
    fn identity_matrix_gives_unit_gains() {
        assert_eq!(white_balance_gains(Mat3::IDENTITY).unwrap(), Vec3::splat(1.0));
    }

    /// A camera with doubled red sensitivity reports a matrix whose inverse
    /// responds (2, 1, 1) to E, so the red gain halves.
    #[test]
    fn doubled_red_sensitivity_halves_red_gain() {
        let m = Mat3::IDENTITY.mul_mat(Mat3::diagonal(Vec3::new(0.5, 1.0, 1.0)));
        let gains = white_balance_gains(m).unwrap();
        assert!((gains.x - 0.5).abs() < 1e-12);
        assert!((gains.y - 1.0).abs() < 1e-12);
        assert!((gains.z - 1.0).abs() < 1e-12);
    }

    /// Synthetic capture oracle: an E-lit card balances to R = G = B.
    #[test]
    fn e_lit_card_balances_to_neutral() {
        let matrix = Mat3::from_rows([[0.6, 0.3, 0.1], [0.2, 0.7, 0.1], [0.1, 0.2, 0.7]]);
        let raw = synthesize_capture(
            Chromaticity::EQUAL_ENERGY,
            0.5,
            matrix,
            Vec3::new(1.8, 1.0, 0.6),
            BayerPattern::Rggb,
            16,
            16,
            128,
            16383,
        );
        let (mut mosaic, pattern, region) = normalize_raw(&raw).unwrap();
        let gains = white_balance_gains(raw.camera_to_xyz).unwrap();
        white_balance_e(&mut mosaic, pattern, gains);
        let rgb = demosaic_bilinear(&mosaic, pattern);
        for y in region.y0..region.y1 {
            for x in region.x0..region.x1 {
                let p = rgb.pixel(x, y);
                assert!((p[0] - p[1]).abs() < 1e-3, "{p:?}");
                assert!((p[1] - p[2]).abs() < 1e-3, "{p:?}");
            }
        }
    }

    #[test]
    fn constant_mosaic_demosaics_to_constant_rgb() {
        let mosaic = Raster::constant(8, 8, 1, 0.42);
        let rgb = demosaic_bilinear(&mosaic, BayerPattern::Gbrg);
        assert_eq!((rgb.width(), rgb.height()), (8, 8));
        assert!(rgb.data().iter().all(|&v| (v - 0.42).abs() < 1e-12));
    }

    /// Direct interpolation oracle: a pure-red field keeps G = B = 0.
    #[test]
    fn red_field_demosaics_to_red() {
        let mut mosaic = Raster::new(10, 10, 1);
        for y in 0..10 {
            for x in 0..10 {
                if BayerPattern::Rggb.channel_at(x, y) == CfaChannel::R {
                    mosaic.set(x, y, 0, 1.0);
                }
            }
        }
        let rgb = demosaic_bilinear(&mosaic, BayerPattern::Rggb);
        for y in 2..8 {
            for x in 2..8 {
                let p = rgb.pixel(x, y);
                assert!((p[0] - 1.0).abs() < 1e-12);
                assert_eq!(p[1], 0.0);
                assert_eq!(p[2], 0.0);
            }
        }
    }

    #[test]
    fn camera_to_xyz_examples() {
        let img = Raster::constant(2, 2, 3, 0.5);
        let out = camera_to_xyz(&img, Mat3::IDENTITY);
        assert_eq!(out.data(), img.data());

        let m = Mat3::from_rows([[0.5, 0.25, 0.25], [0.1, 0.8, 0.1], [0.0, 0.2, 0.8]]);
        let mut one = Raster::new(1, 1, 3);
        one.set_vec3(0, 0, Vec3::new(0.2, 0.4, 0.6));
        let out = camera_to_xyz(&one, m);
        let expect = Vec3::new(
            0.5 * 0.2 + 0.25 * 0.4 + 0.25 * 0.6,
            0.1 * 0.2 + 0.8 * 0.4 + 0.1 * 0.6,
            0.2 * 0.4 + 0.8 * 0.6,
        );
        let got = out.get_vec3(0, 0);
        assert!((got - expect).length() < 1e-12);

        // Linearity.
        let mut scaled = Raster::new(1, 1, 3);
        scaled.set_vec3(0, 0, Vec3::new(0.2, 0.4, 0.6) * 3.0);
        let out2 = camera_to_xyz(&scaled, m);
        assert!((out2.get_vec3(0, 0) - got * 3.0).length() < 1e-12);
    }

    #[test]
    fn chromaticity_examples() {
        let img = Raster::constant(4, 4, 3, 0.7);
        let c = compute_chromaticity(&img, Rect { x0: 0, y0: 0, x1: 4, y1: 4 }).unwrap();
        assert_eq!(c, Chromaticity::new(1.0 / 3.0, 1.0 / 3.0));

        let mut img = Raster::new(2, 1, 3);
        img.set_vec3(0, 0, Vec3::new(2.0, 1.0, 1.0));
        img.set_vec3(1, 0, Vec3::new(2.0, 1.0, 1.0));
        let c = compute_chromaticity(&img, Rect { x0: 0, y0: 0, x1: 2, y1: 1 }).unwrap();
        assert_eq!(c, Chromaticity::new(0.5, 0.25));

        assert!(matches!(
            compute_chromaticity(&img, Rect { x0: 0, y0: 0, x1: 0, y1: 1 }),
            Err(CoreError::EmptyRegion)
        ));
    }

    /// Forward-simulate a capture and invert it through the pipeline.
    #[test]
    fn end_to_end_recovers_injected_chromaticity() {
        let matrix = Mat3::from_rows([[0.7, 0.2, 0.1], [0.25, 0.65, 0.1], [0.05, 0.15, 0.8]]);
        let injected = Chromaticity::new(0.45, 0.41);
        let raw = synthesize_capture(
            injected,
            0.4,
            matrix,
            Vec3::new(1.3, 1.0, 0.8),
            BayerPattern::Bggr,
            24,
            24,
            512,
            15871,
        );
        let got = process_capture(&raw).unwrap();
        assert!((got.x - injected.x).abs() < 0.005, "x {}", got.x);
        assert!((got.y - injected.y).abs() < 0.005, "y {}", got.y);
    }

    /// Scaling the exposure leaves the chromaticity unchanged (pre-clamping).
    #[test]
    fn scale_invariance() {
        let matrix = Mat3::from_rows([[0.65, 0.25, 0.1], [0.2, 0.7, 0.1], [0.1, 0.1, 0.8]]);
        let injected = Chromaticity::new(0.52, 0.42);
        let a = process_capture(&synthesize_capture(
            injected,
            0.2,
            matrix,
            Vec3::splat(1.0),
            BayerPattern::Rggb,
            16,
            16,
            0,
            65535,
        ))
        .unwrap();
        let b = process_capture(&synthesize_capture(
            injected,
            0.6,
            matrix,
            Vec3::splat(1.0),
            BayerPattern::Rggb,
            16,
            16,
            0,
            65535,
        ))
        .unwrap();
        assert!((a.x - b.x).abs() < 1e-4);
        assert!((a.y - b.y).abs() < 1e-4);
    }

    /// Round trips across random physical illuminants. Chromaticities stay
    /// inside the synthetic camera's gamut and exposures below clipping, since
    /// a clipped channel shifts hue in any pipeline.
    #[test]
    fn twenty_random_round_trips() {
        let matrix = Mat3::from_rows([[0.7, 0.2, 0.1], [0.25, 0.65, 0.1], [0.05, 0.15, 0.8]]);
        let mut rng = RngStream::new(71, 0);
        for trial in 0..20 {
            let injected = loop {
                let x = rng.uniform(0.28, 0.5);
                let y = rng.uniform(0.32, 0.42);
                if x + y <= 0.85 {
                    break Chromaticity::new(x, y);
                }
            };
            let raw = synthesize_capture(
                injected,
                rng.uniform(0.05, 0.25),
                matrix,
                Vec3::new(rng.uniform(0.7, 1.5), 1.0, rng.uniform(0.7, 1.5)),
                BayerPattern::Grbg,
                20,
                20,
                256,
                16383,
            );
            let got = process_capture(&raw).unwrap();
            assert!(
                (got.x - injected.x).abs() < 0.005 && (got.y - injected.y).abs() < 0.005,
                "trial {trial}: injected ({}, {}) got ({}, {})",
                injected.x,
                injected.y,
                got.x,
                got.y
            );
            assert!(got.is_physical());
        }
    }
}
