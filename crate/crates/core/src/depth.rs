//! Depth map refinement: instance-guided cross-bilateral filtering, uncertain
//! region detection, and surface-normal-guided optimization of the depth map.

use alloc::vec;
use alloc::vec::Vec;

use crate::camera::Intrinsics;
use crate::error::CoreError;
use crate::fmath;
use crate::raster::{BitMask, IdMask, Raster};

/// Binary map of pixels whose depth is considered unreliable, together with
/// the detection parameters that produced it.
#[derive(Clone, Debug)]
pub struct UncertainMask {
    /// true = uncertain.
    pub uncertain: BitMask,
    /// Sliding window size in pixels.
    pub window: usize,
    /// Depth variance threshold in square meters.
    pub variance_threshold: f64,
    /// Pixels deeper than this are never marked uncertain (meters).
    pub distance_cutoff: f64,
}

impl UncertainMask {
    /// All pixels certain; used when uncertain-region handling is bypassed.
    pub fn none(width: usize, height: usize) -> Self {
        UncertainMask {
            uncertain: BitMask::new(width, height),
            window: 0,
            variance_threshold: 0.0,
            distance_cutoff: f64::INFINITY,
        }
    }

    /// The complement mask: true = certain.
    pub fn complement(&self) -> BitMask {
        let mut out = BitMask::new(self.uncertain.width(), self.uncertain.height());
        for y in 0..out.height() {
            for x in 0..out.width() {
                out.set(x, y, !self.uncertain.get(x, y));
            }
        }
        out
    }
}

/// Filter window radius covering three standard deviations of the spatial kernel.
pub fn default_filter_radius(sigma_s: f64) -> usize {
    (fmath::ceil(3.0 * sigma_s) as usize).max(1)
}

/// Mid-range of a depth raster, the default distance cutoff for uncertain regions.
pub fn depth_mid_range(depth: &Raster) -> f64 {
    0.5 * (depth.min_value() + depth.max_value())
}

/// Instance-reference cross-bilateral filter.
///
/// Each output depth is a Gaussian-weighted average of input depths over a
/// (2 radius + 1)^2 neighborhood, restricted to pixels that carry the same
/// instance label as the center. The center pixel always contributes weight 1,
/// so the normalizer is never zero.
pub fn cross_bilateral_filter(
    depth: &Raster,
    labels: &IdMask,
    sigma_s: f64,
    radius: usize,
) -> Raster {
    assert!(sigma_s > 0.0 && radius >= 1);
    assert_eq!(depth.channels(), 1);
    assert_eq!((depth.width(), depth.height()), (labels.width(), labels.height()));
    let (w, h) = (depth.width(), depth.height());
    let r = radius as isize;
    let inv_two_sigma2 = 1.0 / (2.0 * sigma_s * sigma_s);

    // The spatial weight depends only on the offset; precompute one quadrant row.
    let mut kernel = vec![0.0f64; (2 * radius + 1) * (2 * radius + 1)];
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = (dx * dx + dy * dy) as f64;
            kernel[((dy + r) * (2 * r + 1) + dx + r) as usize] = fmath::exp(-d2 * inv_two_sigma2);
        }
    }

    let mut out = Raster::new(w, h, 1);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let label = labels.get(x as usize, y as usize);
            let mut num = 0.0;
            let mut den = 0.0;
            let y0 = (y - r).max(0);
            let y1 = (y + r).min(h as isize - 1);
            let x0 = (x - r).max(0);
            let x1 = (x + r).min(w as isize - 1);
            for qy in y0..=y1 {
                for qx in x0..=x1 {
                    if labels.get(qx as usize, qy as usize) != label {
                        continue;
                    }
                    let wgt = kernel[((qy - y + r) * (2 * r + 1) + qx - x + r) as usize];
                    num += wgt * depth.get(qx as usize, qy as usize, 0);
                    den += wgt;
                }
            }
            out.set(x as usize, y as usize, 0, num / den);
        }
    }
    out
}

/// Flags pixels near multi-instance, high-variance depth windows.
///
/// A k x k window sliding with stride 1 marks all of its pixels uncertain iff
/// it overlaps at least two distinct instance labels and the population
/// variance of the depths inside it exceeds `t`. Pixels deeper than `r_max`
/// are cleared afterwards.
pub fn detect_uncertain_regions(
    depth: &Raster,
    labels: &IdMask,
    k: usize,
    t: f64,
    r_max: f64,
) -> UncertainMask {
    assert!(k >= 2);
    assert_eq!((depth.width(), depth.height()), (labels.width(), labels.height()));
    let (w, h) = (depth.width(), depth.height());
    let mut uncertain = BitMask::new(w, h);

    if w >= k && h >= k {
        for wy in 0..=(h - k) {
            for wx in 0..=(w - k) {
                let first = labels.get(wx, wy);
                let mut multi = false;
                let mut sum = 0.0;
                let mut sum_sq = 0.0;
                for y in wy..wy + k {
                    for x in wx..wx + k {
                        if labels.get(x, y) != first {
                            multi = true;
                        }
                        let d = depth.get(x, y, 0);
                        sum += d;
                        sum_sq += d * d;
                    }
                }
                if !multi {
                    continue;
                }
                let n = (k * k) as f64;
                let mean = sum / n;
                let variance = sum_sq / n - mean * mean;
                if variance > t {
                    for y in wy..wy + k {
                        for x in wx..wx + k {
                            uncertain.set(x, y, true);
                        }
                    }
                }
            }
        }
    }

    for y in 0..h {
        for x in 0..w {
            if uncertain.get(x, y) && depth.get(x, y, 0) > r_max {
                uncertain.set(x, y, false);
            }
        }
    }

    UncertainMask { uncertain, window: k, variance_threshold: t, distance_cutoff: r_max }
}

/// Gradient of the surface graph (x, y) -> (x, y, z(x, y)) at an interior pixel,
/// returned as the two rows (1, 0, dz/dx) and (0, 1, dz/dy).
///
/// Depth derivatives use central differences in pixel space lifted to camera
/// coordinates with the first-order chain rule dz/dx ~ (fx / z) dz/du.
pub fn tangent_gradient(
    depth: &Raster,
    intrinsics: &Intrinsics,
    x: usize,
    y: usize,
) -> [[f64; 3]; 2] {
    assert!(
        x >= 1 && y >= 1 && x + 1 < depth.width() && y + 1 < depth.height(),
        "tangent_gradient requires an interior pixel"
    );
    let z = depth.get(x, y, 0);
    let dz_du = 0.5 * (depth.get(x + 1, y, 0) - depth.get(x - 1, y, 0));
    let dz_dv = 0.5 * (depth.get(x, y + 1, 0) - depth.get(x, y - 1, 0));
    let dz_dx = intrinsics.fx / z * dz_du;
    let dz_dy = intrinsics.fy / z * dz_dv;
    [[1.0, 0.0, dz_dx], [0.0, 1.0, dz_dy]]
}

/// Normal-consistency loss: mean over all pixels of the squared norm of the
/// tangent-gradient rows projected onto the predicted normal, restricted to
/// certain pixels. Border pixels are excluded (central differences need both
/// neighbors); the normalizer stays the total pixel count.
pub fn loss_normal_consistency(
    depth: &Raster,
    normals: &Raster,
    certain: &BitMask,
    intrinsics: &Intrinsics,
) -> f64 {
    loss_and_gradient(depth, normals, certain, intrinsics, 1.0, 0.0, depth).0
}

/// Data-fidelity loss: mean squared difference between `reference` and `depth`.
pub fn loss_depth_fidelity(depth: &Raster, reference: &Raster) -> f64 {
    assert_eq!((depth.width(), depth.height()), (reference.width(), reference.height()));
    let m = (depth.width() * depth.height()) as f64;
    depth
        .data()
        .iter()
        .zip(reference.data())
        .map(|(z, d)| (d - z) * (d - z))
        .sum::<f64>()
        / m
}

/// Evaluates lambda1 * L_normal + lambda2 * L_fidelity and its analytic
/// gradient with respect to every depth value.
pub fn loss_and_gradient(
    depth: &Raster,
    normals: &Raster,
    certain: &BitMask,
    intrinsics: &Intrinsics,
    lambda1: f64,
    lambda2: f64,
    reference: &Raster,
) -> (f64, Vec<f64>) {
    let (w, h) = (depth.width(), depth.height());
    assert_eq!((normals.width(), normals.height()), (w, h));
    assert_eq!((certain.width(), certain.height()), (w, h));
    assert_eq!((reference.width(), reference.height()), (w, h));
    let m = (w * h) as f64;
    let mut grad = vec![0.0f64; w * h];
    let mut l1 = 0.0;

    // Per-pixel residual coefficients reused by the neighbor terms:
    //   c1 = 2 lambda1 r1 n3 / m, c2 = 2 lambda1 r2 n3 / m.
    let mut c1 = vec![0.0f64; w * h];
    let mut c2 = vec![0.0f64; w * h];
    let mut a_over_z = vec![0.0f64; w * h];
    let mut b_over_z = vec![0.0f64; w * h];
    let mut inv_z = vec![0.0f64; w * h];

    if lambda1 != 0.0 && w >= 3 && h >= 3 {
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                if !certain.get(x, y) {
                    continue;
                }
                let i = y * w + x;
                let z = depth.get(x, y, 0);
                let n = normals.pixel(x, y);
                let dz_du = 0.5 * (depth.get(x + 1, y, 0) - depth.get(x - 1, y, 0));
                let dz_dv = 0.5 * (depth.get(x, y + 1, 0) - depth.get(x, y - 1, 0));
                let a = intrinsics.fx / z * dz_du;
                let b = intrinsics.fy / z * dz_dv;
                let r1 = n[0] + a * n[2];
                let r2 = n[1] + b * n[2];
                l1 += r1 * r1 + r2 * r2;
                c1[i] = 2.0 * lambda1 * r1 * n[2] / m;
                c2[i] = 2.0 * lambda1 * r2 * n[2] / m;
                a_over_z[i] = a / z;
                b_over_z[i] = b / z;
                inv_z[i] = 1.0 / z;
            }
        }
        l1 /= m;

        for y in 0..h {
            for x in 0..w {
                let q = y * w + x;
                let mut g = 0.0;
                // p = q: both finite differences divide by z(q).
                g -= c1[q] * a_over_z[q] + c2[q] * b_over_z[q];
                // q is the +u neighbor of (x-1, y) and the -u neighbor of (x+1, y).
                if x >= 1 {
                    let p = q - 1;
                    g += c1[p] * 0.5 * intrinsics.fx * inv_z[p];
                }
                if x + 1 < w {
                    let p = q + 1;
                    g -= c1[p] * 0.5 * intrinsics.fx * inv_z[p];
                }
                if y >= 1 {
                    let p = q - w;
                    g += c2[p] * 0.5 * intrinsics.fy * inv_z[p];
                }
                if y + 1 < h {
                    let p = q + w;
                    g -= c2[p] * 0.5 * intrinsics.fy * inv_z[p];
                }
                grad[q] = g;
            }
        }
    }

    let mut l2 = 0.0;
    for (i, (z, d)) in depth.data().iter().zip(reference.data()).enumerate() {
        let diff = d - z;
        l2 += diff * diff;
        grad[i] += 2.0 * lambda2 * (z - d) / m;
    }
    l2 /= m;

    (lambda1 * l1 + lambda2 * l2, grad)
}

/// Parameters of the normal-guided depth optimization.
#[derive(Clone, Copy, Debug)]
pub struct DepthOptParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Depths are clamped above this after every step (meters).
    pub min_depth: f64,
}

impl Default for DepthOptParams {
    fn default() -> Self {
        DepthOptParams {
            lambda1: 50.0,
            lambda2: 1.0,
            learning_rate: 2e-4,
            iterations: 1000,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            min_depth: 1e-3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DepthOptResult {
    pub depth: Raster,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Refines a filtered depth map by adaptive-moment gradient descent on the
/// combined normal-consistency and fidelity loss. The iterate with the lowest
/// observed loss is returned, so the final loss never exceeds the initial one.
pub fn optimize_depth(
    filtered: &Raster,
    normals: &Raster,
    uncertain: &UncertainMask,
    intrinsics: &Intrinsics,
    params: &DepthOptParams,
) -> Result<DepthOptResult, CoreError> {
    assert!(filtered.min_value() > 0.0, "optimize_depth requires positive depth");
    let certain = uncertain.complement();
    let n = filtered.width() * filtered.height();
    let mut z = filtered.clone();
    let mut m1 = vec![0.0f64; n];
    let mut m2 = vec![0.0f64; n];

    let (initial_loss, _) = loss_and_gradient(
        &z, normals, &certain, intrinsics, params.lambda1, params.lambda2, filtered,
    );
    if !initial_loss.is_finite() {
        return Err(CoreError::DivergedLoss { iteration: 0 });
    }
    let mut best_loss = initial_loss;
    let mut best_z = z.clone();

    for t in 1..=params.iterations {
        let (loss, grad) = loss_and_gradient(
            &z, normals, &certain, intrinsics, params.lambda1, params.lambda2, filtered,
        );
        if !loss.is_finite() {
            return Err(CoreError::DivergedLoss { iteration: t });
        }
        if loss < best_loss {
            best_loss = loss;
            best_z.data_mut().copy_from_slice(z.data());
        }

        let bias1 = 1.0 - fmath::pow(params.beta1, t as f64);
        let bias2 = 1.0 - fmath::pow(params.beta2, t as f64);
        let data = z.data_mut();
        for i in 0..n {
            m1[i] = params.beta1 * m1[i] + (1.0 - params.beta1) * grad[i];
            m2[i] = params.beta2 * m2[i] + (1.0 - params.beta2) * grad[i] * grad[i];
            let m_hat = m1[i] / bias1;
            let v_hat = m2[i] / bias2;
            data[i] -= params.learning_rate * m_hat / (fmath::sqrt(v_hat) + params.epsilon);
            if data[i] < params.min_depth {
                data[i] = params.min_depth;
            }
        }
    }

    let (final_iter_loss, _) = loss_and_gradient(
        &z, normals, &certain, intrinsics, params.lambda1, params.lambda2, filtered,
    );
    if final_iter_loss.is_finite() && final_iter_loss < best_loss {
        best_loss = final_iter_loss;
        best_z = z;
    }

    Ok(DepthOptResult { depth: best_z, initial_loss, final_loss: best_loss })
}
