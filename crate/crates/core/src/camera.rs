//! Pinhole camera model.
//!
//! The camera sits at the origin looking down +z, with x pointing right and y
//! pointing down so that pixel coordinates and camera coordinates agree in
//! orientation. Depths are metric.

use crate::math::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Self {
        Intrinsics { fx, fy, cx, cy }
    }

    pub fn is_valid(&self) -> bool {
        self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()
            && self.cx.is_finite() && self.cy.is_finite()
    }

    /// Lifts pixel (u, v) with depth d to a camera-frame point:
    /// x = d * ((u - cx)/fx, (v - cy)/fy, 1).
    #[inline]
    pub fn backproject(&self, u: f64, v: f64, depth: f64) -> Vec3 {
        Vec3::new(
            depth * (u - self.cx) / self.fx,
            depth * (v - self.cy) / self.fy,
            depth,
        )
    }

    /// Projects a camera-frame point with positive z to pixel coordinates.
    #[inline]
    pub fn project(&self, p: Vec3) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    /// Unit ray direction through pixel coordinates (u, v).
    #[inline]
    pub fn ray_direction(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0).normalized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER: Intrinsics = Intrinsics { fx: 1780.0, fy: 1780.0, cx: 959.5, cy: 539.5 };

    #[test]
    fn principal_point_maps_to_optical_axis() {
        let p = PAPER.backproject(959.5, 539.5, 10.0);
        assert_eq!(p, Vec3::new(0.0, 0.0, 10.0));
    }

    #[test]
    fn unit_normalized_coordinate() {
        let p = PAPER.backproject(PAPER.cx + PAPER.fx, PAPER.cy, 2.0);
        assert_eq!(p, Vec3::new(2.0, 0.0, 2.0));
    }

    #[test]
    fn project_backproject_roundtrip() {
        for (u, v, d) in [(0.0, 0.0, 1.0), (1919.0, 1079.0, 42.5), (397.25, 512.75, 3.3)] {
            let (u2, v2) = PAPER.project(PAPER.backproject(u, v, d));
            assert!((u2 - u).abs() < 1e-6);
            assert!((v2 - v).abs() < 1e-6);
        }
    }
}
