//! Raster resampling: plain bilinear for geometric maps and joint bilateral
//! upsampling for material maps guided by the full-resolution daytime image.

use crate::error::CoreError;
use crate::fmath;
use crate::raster::Raster;

/// How an output pixel reads the guide image in [`joint_bilateral_upsample`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GuideChannel {
    /// Rec. 709 luma of the guide, normalized to [0, 1].
    Luma,
    /// Per-channel RGB distance, normalized to [0, 1].
    Rgb,
}

/// Align-corners mapping from a destination index to source coordinates.
#[inline]
fn src_coord(dst: usize, dst_len: usize, src_len: usize) -> f64 {
    if dst_len <= 1 || src_len <= 1 {
        return 0.0;
    }
    dst as f64 * (src_len - 1) as f64 / (dst_len - 1) as f64
}

/// Separable bilinear upsampling with aligned corners and edge clamping.
///
/// Normal maps should be re-normalized by the caller after interpolation;
/// see [`renormalize_vectors`].
pub fn bilinear_upsample(map: &Raster, target_w: usize, target_h: usize) -> Result<Raster, CoreError> {
    if map.width() == 0 || map.height() == 0 || target_w == 0 || target_h == 0 {
        return Err(CoreError::EmptyRaster);
    }
    let channels = map.channels();
    let mut out = Raster::new(target_w, target_h, channels);
    for y in 0..target_h {
        let sy = src_coord(y, target_h, map.height());
        let y0 = fmath::floor(sy) as usize;
        let y1 = (y0 + 1).min(map.height() - 1);
        let fy = sy - y0 as f64;
        for x in 0..target_w {
            let sx = src_coord(x, target_w, map.width());
            let x0 = fmath::floor(sx) as usize;
            let x1 = (x0 + 1).min(map.width() - 1);
            let fx = sx - x0 as f64;
            for c in 0..channels {
                let top = map.get(x0, y0, c) * (1.0 - fx) + map.get(x1, y0, c) * fx;
                let bot = map.get(x0, y1, c) * (1.0 - fx) + map.get(x1, y1, c) * fx;
                out.set(x, y, c, top * (1.0 - fy) + bot * fy);
            }
        }
    }
    Ok(out)
}

/// Rescales every pixel of a 3-channel raster to unit length. Zero-length
/// pixels are left untouched.
pub fn renormalize_vectors(map: &mut Raster) {
    debug_assert_eq!(map.channels(), 3);
    for y in 0..map.height() {
        for x in 0..map.width() {
            let p = map.pixel_mut(x, y);
            let len = fmath::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
            if len > 0.0 {
                p[0] /= len;
                p[1] /= len;
                p[2] /= len;
            }
        }
    }
}

fn guide_intensity(guide: &Raster, x: usize, y: usize, mode: GuideChannel) -> [f64; 3] {
    match mode {
        GuideChannel::Luma => {
            let p = guide.pixel(x, y);
            let l = if guide.channels() >= 3 {
                crate::color::luma(p[0], p[1], p[2])
            } else {
                p[0]
            };
            [l, 0.0, 0.0]
        }
        GuideChannel::Rgb => {
            let p = guide.pixel(x, y);
            if guide.channels() >= 3 {
                [p[0], p[1], p[2]]
            } else {
                [p[0], p[0], p[0]]
            }
        }
    }
}

/// Joint bilateral upsampling of a low-resolution map under a full-resolution guide.
///
/// Every output pixel P is a normalized weighted mean over a neighborhood of
/// low-resolution samples q. Spatial weights are a Gaussian on the distance, in
/// output pixels, between P and q's position upscaled to the output grid;
/// range weights are a Gaussian on the guide-intensity difference between P and
/// q's upscaled position. Guide intensities are expected in [0, 1].
///
/// If all weights underflow to zero the nearest low-resolution sample is used.
pub fn joint_bilateral_upsample(
    low: &Raster,
    guide: &Raster,
    sigma_spatial: f64,
    sigma_range: f64,
    mode: GuideChannel,
) -> Result<Raster, CoreError> {
    if low.width() == 0 || low.height() == 0 || guide.width() == 0 || guide.height() == 0 {
        return Err(CoreError::EmptyRaster);
    }
    let (tw, th) = (guide.width(), guide.height());
    let channels = low.channels();
    let mut out = Raster::new(tw, th, channels);

    let scale_x = if low.width() > 1 { (tw - 1) as f64 / (low.width() - 1) as f64 } else { 1.0 };
    let scale_y = if low.height() > 1 { (th - 1) as f64 / (low.height() - 1) as f64 } else { 1.0 };
    // Neighborhood radius in low-res samples: 3 sigma of the spatial kernel.
    let radius_x = (fmath::ceil(3.0 * sigma_spatial / scale_x) as isize).max(1);
    let radius_y = (fmath::ceil(3.0 * sigma_spatial / scale_y) as isize).max(1);
    let inv_two_sig_s2 = 1.0 / (2.0 * sigma_spatial * sigma_spatial);
    let inv_two_sig_r2 = 1.0 / (2.0 * sigma_range * sigma_range);

    let mut acc = alloc::vec![0.0f64; channels];
    for y in 0..th {
        let ly = src_coord(y, th, low.height());
        let cy = fmath::floor(ly + 0.5) as isize;
        for x in 0..tw {
            let lx = src_coord(x, tw, low.width());
            let cx = fmath::floor(lx + 0.5) as isize;
            let g_p = guide_intensity(guide, x, y, mode);

            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut wsum = 0.0;
            for qy in (cy - radius_y)..=(cy + radius_y) {
                if qy < 0 || qy >= low.height() as isize {
                    continue;
                }
                for qx in (cx - radius_x)..=(cx + radius_x) {
                    if qx < 0 || qx >= low.width() as isize {
                        continue;
                    }
                    // q's position on the output grid.
                    let ux = qx as f64 * scale_x;
                    let uy = qy as f64 * scale_y;
                    let dx = ux - x as f64;
                    let dy = uy - y as f64;
                    let w_s = fmath::exp(-(dx * dx + dy * dy) * inv_two_sig_s2);

                    let gx = (fmath::floor(ux + 0.5) as isize).clamp(0, tw as isize - 1) as usize;
                    let gy = (fmath::floor(uy + 0.5) as isize).clamp(0, th as isize - 1) as usize;
                    let g_q = guide_intensity(guide, gx, gy, mode);
                    let dr = (g_p[0] - g_q[0]) * (g_p[0] - g_q[0])
                        + (g_p[1] - g_q[1]) * (g_p[1] - g_q[1])
                        + (g_p[2] - g_q[2]) * (g_p[2] - g_q[2]);
                    let w = w_s * fmath::exp(-dr * inv_two_sig_r2);

                    for (c, a) in acc.iter_mut().enumerate() {
                        *a += w * low.get(qx as usize, qy as usize, c);
                    }
                    wsum += w;
                }
            }
            if wsum > 0.0 {
                for (c, a) in acc.iter().enumerate() {
                    out.set(x, y, c, *a / wsum);
                }
            } else {
                // Degenerate weights: fall back to the nearest sample.
                let nx = cx.clamp(0, low.width() as isize - 1) as usize;
                let ny = cy.clamp(0, low.height() as isize - 1) as usize;
                for c in 0..channels {
                    out.set(x, y, c, low.get(nx, ny, c));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn constant_map_stays_constant() {
        let m = Raster::constant(4, 4, 1, 3.0);
        let up = bilinear_upsample(&m, 11, 7).unwrap();
        assert!(up.data().iter().all(|&v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn row_interpolation_with_aligned_corners() {
        let m = Raster::from_data(2, 1, 1, alloc::vec![0.0, 1.0]);
        let up = bilinear_upsample(&m, 3, 1).unwrap();
        assert_eq!(up.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn zero_sized_input_is_rejected() {
        let m = Raster::new(0, 3, 1);
        assert_eq!(bilinear_upsample(&m, 4, 4), Err(CoreError::EmptyRaster));
    }

    /// Independent per-pixel interpolation oracle for a 2x upsample.
    #[test]
    fn random_depth_matches_per_pixel_oracle() {
        let mut rng = RngStream::new(11, 0);
        let mut src = Raster::new(8, 8, 1);
        for y in 0..8 {
            for x in 0..8 {
                src.set(x, y, 0, rng.uniform(1.0, 9.0));
            }
        }
        let up = bilinear_upsample(&src, 16, 16).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                let sx = x as f64 * 7.0 / 15.0;
                let sy = y as f64 * 7.0 / 15.0;
                let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
                let (x1, y1) = ((x0 + 1).min(7), (y0 + 1).min(7));
                let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
                let expect = src.get(x0, y0, 0) * (1.0 - fx) * (1.0 - fy)
                    + src.get(x1, y0, 0) * fx * (1.0 - fy)
                    + src.get(x0, y1, 0) * (1.0 - fx) * fy
                    + src.get(x1, y1, 0) * fx * fy;
                assert!((up.get(x, y, 0) - expect).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn bilinear_output_within_source_range() {
        let mut rng = RngStream::new(12, 0);
        let mut src = Raster::new(5, 6, 1);
        for y in 0..6 {
            for x in 0..5 {
                src.set(x, y, 0, rng.uniform(-2.0, 2.0));
            }
        }
        let (lo, hi) = (src.min_value(), src.max_value());
        let up = bilinear_upsample(&src, 17, 13).unwrap();
        for &v in up.data() {
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn constant_guide_reduces_to_spatial_only() {
        let mut rng = RngStream::new(13, 0);
        let mut low = Raster::new(4, 4, 1);
        for y in 0..4 {
            for x in 0..4 {
                low.set(x, y, 0, rng.uniform(0.0, 1.0));
            }
        }
        let guide = Raster::constant(8, 8, 3, 0.5);
        let jbu = joint_bilateral_upsample(&low, &guide, 2.0, 0.1, GuideChannel::Luma).unwrap();

        // Spatial-only brute force with the same kernel definition.
        for y in 0..8usize {
            for x in 0..8usize {
                let (mut acc, mut wsum) = (0.0, 0.0);
                for qy in 0..4usize {
                    for qx in 0..4usize {
                        let ux = qx as f64 * 7.0 / 3.0;
                        let uy = qy as f64 * 7.0 / 3.0;
                        let d2 = (ux - x as f64).powi(2) + (uy - y as f64).powi(2);
                        let w = (-d2 / 8.0).exp();
                        acc += w * low.get(qx, qy, 0);
                        wsum += w;
                    }
                }
                assert!((jbu.get(x, y, 0) - acc / wsum).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_low_res_is_constant_regardless_of_guide() {
        let low = Raster::constant(4, 4, 3, 0.25);
        let mut guide = Raster::new(8, 8, 3);
        for y in 0..8 {
            for x in 0..8 {
                let v = if (x + y) % 2 == 0 { 0.9 } else { 0.1 };
                guide.set_vec3(x, y, crate::math::Vec3::splat(v));
            }
        }
        let out = joint_bilateral_upsample(&low, &guide, 2.0, 0.1, GuideChannel::Luma).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.25).abs() < 1e-12));
    }

    /// Brute-force double-loop oracle on a two-tone guide.
    #[test]
    fn two_tone_guide_matches_brute_force_oracle() {
        let mut rng = RngStream::new(14, 0);
        let mut low = Raster::new(4, 4, 3);
        for y in 0..4 {
            for x in 0..4 {
                for c in 0..3 {
                    low.set(x, y, c, rng.uniform(0.0, 1.0));
                }
            }
        }
        let mut guide = Raster::new(8, 8, 3);
        for y in 0..8 {
            for x in 0..8 {
                let v = if x < 4 { 0.2 } else { 0.8 };
                guide.set_vec3(x, y, crate::math::Vec3::splat(v));
            }
        }
        let sigma_s = 2.0;
        let sigma_r = 0.1;
        let jbu = joint_bilateral_upsample(&low, &guide, sigma_s, sigma_r, GuideChannel::Luma).unwrap();

        let lum = |x: usize, y: usize| {
            let p = guide.pixel(x, y);
            crate::color::luma(p[0], p[1], p[2])
        };
        for y in 0..8usize {
            for x in 0..8usize {
                let gp = lum(x, y);
                let mut acc = [0.0; 3];
                let mut wsum = 0.0;
                for qy in 0..4usize {
                    for qx in 0..4usize {
                        let ux = qx as f64 * 7.0 / 3.0;
                        let uy = qy as f64 * 7.0 / 3.0;
                        let d2 = (ux - x as f64).powi(2) + (uy - y as f64).powi(2);
                        let gq = lum(
                            (ux + 0.5).floor().clamp(0.0, 7.0) as usize,
                            (uy + 0.5).floor().clamp(0.0, 7.0) as usize,
                        );
                        let w = (-d2 / (2.0 * sigma_s * sigma_s)).exp()
                            * (-(gp - gq).powi(2) / (2.0 * sigma_r * sigma_r)).exp();
                        for c in 0..3 {
                            acc[c] += w * low.get(qx, qy, c);
                        }
                        wsum += w;
                    }
                }
                for c in 0..3 {
                    assert!((jbu.get(x, y, c) - acc[c] / wsum).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn renormalize_gives_unit_vectors() {
        let mut m = Raster::new(2, 2, 3);
        m.set_vec3(0, 0, crate::math::Vec3::new(0.3, 0.4, 1.2));
        m.set_vec3(1, 1, crate::math::Vec3::new(-2.0, 0.0, 0.0));
        renormalize_vectors(&mut m);
        assert!((m.get_vec3(0, 0).length() - 1.0).abs() < 1e-12);
        assert!((m.get_vec3(1, 1).length() - 1.0).abs() < 1e-12);
    }
}
