//! Camera ISP simulation: exposure, fog glare, Bradford adaptation, sRGB
//! encoding with gamma, heteroscedastic sensor noise, and 8-bit quantization.
//!
//! Stage order: exposure -> glare -> Bradford -> sRGB matrix + gamma -> noise
//! -> quantization. Glare operates in linear light; noise is added to the
//! display-referred signal a sensor pipeline would produce.

use alloc::vec::Vec;

use crate::color::{bradford_matrix, xyz_to_srgb_matrix, Chromaticity};
use crate::error::CoreError;
use crate::fmath;
use crate::math::{Mat3, Vec3};
use crate::raster::Raster;
use crate::rng::{fnv1a, fnv1a_extend, RngStream};

/// Bloom applied to pixels whose luminance exceeds the threshold: the
/// bright-pass image is convolved with three normalized Gaussians of
/// increasing width and added back with the given weights.
#[derive(Clone, Copy, Debug)]
pub struct GlareParams {
    pub enabled: bool,
    pub threshold: f64,
    pub sigmas: [f64; 3],
    pub weights: [f64; 3],
}

impl Default for GlareParams {
    fn default() -> Self {
        GlareParams {
            enabled: true,
            threshold: 5.0,
            sigmas: [2.0, 6.0, 16.0],
            weights: [0.15, 0.08, 0.04],
        }
    }
}

/// Heteroscedastic Gaussian sensor noise with variance a * I + b on the
/// display-referred signal in [0, 1].
#[derive(Clone, Copy, Debug)]
pub struct NoiseParams {
    pub enabled: bool,
    pub signal_dependent: f64,
    pub signal_independent: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams { enabled: true, signal_dependent: 0.01, signal_independent: 0.0005 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IspParams {
    pub exposure_stops: f64,
    pub gamma: f64,
    pub source_white: Chromaticity,
    pub destination_white: Chromaticity,
    pub glare: GlareParams,
    pub noise: NoiseParams,
    pub seed: u64,
}

impl Default for IspParams {
    fn default() -> Self {
        IspParams {
            exposure_stops: 3.25,
            gamma: 2.2,
            // The illuminant database is referenced to equal-energy white;
            // sRGB is native D65.
            source_white: Chromaticity::EQUAL_ENERGY,
            destination_white: Chromaticity::D65,
            glare: GlareParams::default(),
            noise: NoiseParams::default(),
            seed: 0,
        }
    }
}

/// Scales all channels by 2^stops.
pub fn apply_exposure(img: &mut Raster, stops: f64) {
    let m = fmath::exp2(stops);
    img.map_in_place(|v| v * m);
}

/// Applies the Bradford chromatic adaptation from `src` to `dst` white.
pub fn bradford_adapt(img: &mut Raster, src: Chromaticity, dst: Chromaticity) -> Result<(), CoreError> {
    let m = bradford_matrix(src, dst)?;
    apply_matrix(img, m);
    Ok(())
}

fn apply_matrix(img: &mut Raster, m: Mat3) {
    debug_assert_eq!(img.channels(), 3);
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = img.get_vec3(x, y);
            img.set_vec3(x, y, m.mul_vec(v));
        }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (fmath::ceil(3.0 * sigma) as usize).max(1);
    let mut k = Vec::with_capacity(2 * radius + 1);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for i in 0..=2 * radius {
        let d = i as f64 - radius as f64;
        k.push(fmath::exp(-d * d * inv));
    }
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable convolution with zero outside the frame, so halo energy that
/// leaves the image is lost rather than reflected.
fn convolve_zero_pad(src: &Raster, kernel: &[f64]) -> Raster {
    let (w, h, c) = (src.width(), src.height(), src.channels());
    let radius = kernel.len() / 2;
    let mut tmp = Raster::new(w, h, c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, wgt) in kernel.iter().enumerate() {
                    let sx = x as isize + k as isize - radius as isize;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    acc += wgt * src.get(sx as usize, y, ch);
                }
                tmp.set(x, y, ch, acc);
            }
        }
    }
    let mut out = Raster::new(w, h, c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, wgt) in kernel.iter().enumerate() {
                    let sy = y as isize + k as isize - radius as isize;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    acc += wgt * tmp.get(x, sy as usize, ch);
                }
                out.set(x, y, ch, acc);
            }
        }
    }
    out
}

/// Adds bloom around pixels brighter than the luminance threshold.
/// The image must still be linear XYZ (channel 1 is luminance).
pub fn fog_glare(img: &mut Raster, params: &GlareParams) {
    debug_assert_eq!(img.channels(), 3);
    if params.weights.iter().all(|w| *w == 0.0) {
        return;
    }
    let (w, h) = (img.width(), img.height());
    let mut bright = Raster::new(w, h, 3);
    let mut any = false;
    for y in 0..h {
        for x in 0..w {
            let v = img.get_vec3(x, y);
            if v.y > params.threshold {
                bright.set_vec3(x, y, v);
                any = true;
            }
        }
    }
    if !any {
        return;
    }
    for (sigma, weight) in params.sigmas.iter().zip(params.weights.iter()) {
        if *weight == 0.0 {
            continue;
        }
        let kernel = gaussian_kernel(*sigma);
        let halo = convolve_zero_pad(&bright, &kernel);
        for (dst, src) in img.data_mut().iter_mut().zip(halo.data()) {
            *dst += weight * src;
        }
    }
}

/// Linear XYZ to display-referred sRGB in [0, 1]: primaries matrix, clamp,
/// then the power-law encode v^(1/gamma).
pub fn srgb_encode(img: &Raster, gamma: f64) -> Raster {
    debug_assert_eq!(img.channels(), 3);
    let m = xyz_to_srgb_matrix();
    let inv_gamma = 1.0 / gamma;
    let mut out = Raster::new(img.width(), img.height(), 3);
    for y in 0..img.height() {
        for x in 0..img.width() {
            let rgb = m.mul_vec(img.get_vec3(x, y));
            let enc = Vec3::new(
                fmath::pow(rgb.x.clamp(0.0, 1.0), inv_gamma),
                fmath::pow(rgb.y.clamp(0.0, 1.0), inv_gamma),
                fmath::pow(rgb.z.clamp(0.0, 1.0), inv_gamma),
            );
            out.set_vec3(x, y, enc);
        }
    }
    out
}

/// Quantizes [0, 1] samples to 8 bits with round-half-up.
pub fn quantize_8bit(img: &Raster) -> Vec<u8> {
    img.data()
        .iter()
        .map(|v| (fmath::floor(v.clamp(0.0, 1.0) * 255.0 + 0.5)) as u8)
        .collect()
}

/// XYZ straight to an 8-bit sRGB buffer (no noise).
pub fn xyz_to_srgb_gamma(img: &Raster, gamma: f64) -> Vec<u8> {
    quantize_8bit(&srgb_encode(img, gamma))
}

/// Heteroscedastic Gaussian noise: per sample, variance a * I + b, clamped to
/// [0, 1]. Deterministic under the seed; every sample owns an RNG stream.
pub fn add_noise(img: &mut Raster, params: &NoiseParams, seed: u64) {
    if params.signal_dependent == 0.0 && params.signal_independent == 0.0 {
        return;
    }
    let base = fnv1a(b"sensor-noise");
    for (i, v) in img.data_mut().iter_mut().enumerate() {
        let stream = fnv1a_extend(base, &(i as u64).to_le_bytes());
        let mut rng = RngStream::new(seed, stream);
        let variance = params.signal_dependent * *v + params.signal_independent;
        let sigma = fmath::sqrt(variance.max(0.0));
        *v = (*v + sigma * rng.next_normal()).clamp(0.0, 1.0);
    }
}

/// Runs the full development chain on a linear XYZ image.
pub fn develop(linear: &Raster, params: &IspParams) -> Result<Vec<u8>, CoreError> {
    let mut img = linear.clone();
    apply_exposure(&mut img, params.exposure_stops);
    if params.glare.enabled {
        fog_glare(&mut img, &params.glare);
    }
    bradford_adapt(&mut img, params.source_white, params.destination_white)?;
    let mut encoded = srgb_encode(&img, params.gamma);
    if params.noise.enabled {
        add_noise(&mut encoded, &params.noise, params.seed);
    }
    Ok(quantize_8bit(&encoded))
}
