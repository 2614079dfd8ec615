//! CIE color machinery: chromaticity coordinates, sRGB primaries, and the
//! Bradford chromatic adaptation transform.

use crate::error::CoreError;
use crate::math::{Mat3, Vec3};

/// CIE xy chromaticity coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Chromaticity {
    pub x: f64,
    pub y: f64,
}

impl Chromaticity {
    pub const EQUAL_ENERGY: Chromaticity = Chromaticity { x: 1.0 / 3.0, y: 1.0 / 3.0 };
    pub const D65: Chromaticity = Chromaticity { x: 0.3127, y: 0.3290 };
    pub const D50: Chromaticity = Chromaticity { x: 0.3457, y: 0.3585 };

    pub fn new(x: f64, y: f64) -> Self {
        Chromaticity { x, y }
    }

    pub fn is_physical(self) -> bool {
        self.x > 0.0 && self.y > 0.0 && self.x + self.y < 1.0
    }

    /// XYZ tristimulus with the given luminance Y.
    pub fn to_xyz(self, luminance: f64) -> Vec3 {
        Vec3::new(
            luminance * self.x / self.y,
            luminance,
            luminance * (1.0 - self.x - self.y) / self.y,
        )
    }

    pub fn from_xyz(xyz: Vec3) -> Option<Chromaticity> {
        let s = xyz.x + xyz.y + xyz.z;
        if s <= 0.0 || !s.is_finite() {
            return None;
        }
        Some(Chromaticity::new(xyz.x / s, xyz.y / s))
    }
}

/// Linear sRGB (Rec. 709 primaries, D65 white) to CIE XYZ.
pub const SRGB_TO_XYZ: Mat3 = Mat3::from_rows([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
]);

/// Bradford cone response matrix (XYZ -> sharpened LMS).
pub const BRADFORD: Mat3 = Mat3::from_rows([
    [0.8951, 0.2664, -0.1614],
    [-0.7502, 1.7135, 0.0367],
    [0.0389, -0.0685, 1.0296],
]);

/// XYZ -> linear sRGB, computed as the exact inverse of [`SRGB_TO_XYZ`].
pub fn xyz_to_srgb_matrix() -> Mat3 {
    SRGB_TO_XYZ.inverse().expect("sRGB primaries matrix is invertible")
}

/// Rec. 709 luma of an 8-bit-range or normalized RGB triple (unnormalized weights).
pub fn luma(r: f64, g: f64, b: f64) -> f64 {
    0.2126 * r + 0.7152 * g + 0.0722 * b
}

/// Bradford chromatic adaptation matrix taking XYZ relative to `src_white`
/// to XYZ relative to `dst_white` (both whites normalized to Y = 1 internally).
pub fn bradford_matrix(src_white: Chromaticity, dst_white: Chromaticity) -> Result<Mat3, CoreError> {
    if !src_white.is_physical() || !dst_white.is_physical() {
        return Err(CoreError::DegenerateWhitePoint);
    }
    let src = BRADFORD.mul_vec(src_white.to_xyz(1.0));
    let dst = BRADFORD.mul_vec(dst_white.to_xyz(1.0));
    if src.x == 0.0 || src.y == 0.0 || src.z == 0.0 {
        return Err(CoreError::DegenerateWhitePoint);
    }
    let scale = Mat3::diagonal(Vec3::new(dst.x / src.x, dst.y / src.y, dst.z / src.z));
    let inv = BRADFORD.inverse().expect("Bradford cone matrix is invertible");
    Ok(inv.mul_mat(scale).mul_mat(BRADFORD))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_whites_give_identity() {
        let m = bradford_matrix(Chromaticity::D65, Chromaticity::D65).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((m.rows[i][j] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn d65_to_d50_maps_white() {
        let m = bradford_matrix(Chromaticity::D65, Chromaticity::D50).unwrap();
        let out = m.mul_vec(Chromaticity::D65.to_xyz(1.0));
        // Published D50 white point.
        assert!((out.x - 0.9642).abs() < 1e-3, "X {}", out.x);
        assert!((out.y - 1.0).abs() < 1e-9, "Y {}", out.y);
        assert!((out.z - 0.8249).abs() < 1e-3, "Z {}", out.z);
    }

    #[test]
    fn adapting_source_white_yields_destination_white_exactly() {
        let src = Chromaticity::new(0.41, 0.39);
        let dst = Chromaticity::D65;
        let m = bradford_matrix(src, dst).unwrap();
        let out = m.mul_vec(src.to_xyz(1.0));
        let expect = dst.to_xyz(1.0);
        assert!((out.x - expect.x).abs() < 1e-12);
        assert!((out.y - expect.y).abs() < 1e-12);
        assert!((out.z - expect.z).abs() < 1e-12);
    }

    #[test]
    fn chromaticity_roundtrip_preserves_luminance() {
        let c = Chromaticity::new(0.45, 0.41);
        let xyz = c.to_xyz(3.0);
        assert_eq!(xyz.y, 3.0);
        let back = Chromaticity::from_xyz(xyz).unwrap();
        assert!((back.x - c.x).abs() < 1e-12);
        assert!((back.y - c.y).abs() < 1e-12);
    }

    #[test]
    fn srgb_white_is_d65() {
        let white = SRGB_TO_XYZ.mul_vec(Vec3::splat(1.0));
        let c = Chromaticity::from_xyz(white).unwrap();
        assert!((c.x - Chromaticity::D65.x).abs() < 1e-3);
        assert!((c.y - Chromaticity::D65.y).abs() < 1e-3);
    }
}
