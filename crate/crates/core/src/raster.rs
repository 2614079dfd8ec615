//! Dense image buffers: float rasters with a runtime channel count and integer id masks.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::Vec3;

/// Row-major H x W x C buffer of f64 samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Raster {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height * channels, "raster data length mismatch");
        Raster { width, height, channels, data }
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Raster {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    fn index(&self, x: usize, y: usize) -> usize {
        (y * self.width + x) * self.channels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.index(x, y) + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        let i = self.index(x, y) + c;
        self.data[i] = v;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = self.index(x, y);
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let i = self.index(x, y);
        let c = self.channels;
        &mut self.data[i..i + c]
    }

    /// Sample with integer coordinates clamped to the frame.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize, c: usize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.get(xc, yc, c)
    }

    pub fn get_vec3(&self, x: usize, y: usize) -> Vec3 {
        debug_assert!(self.channels == 3);
        let p = self.pixel(x, y);
        Vec3::new(p[0], p[1], p[2])
    }

    pub fn set_vec3(&mut self, x: usize, y: usize, v: Vec3) {
        debug_assert!(self.channels == 3);
        let p = self.pixel_mut(x, y);
        p[0] = v.x;
        p[1] = v.y;
        p[2] = v.z;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map_in_place(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }
}

/// Row-major H x W mask of integer ids (instance ids, category ids).
#[derive(Clone, Debug, PartialEq)]
pub struct IdMask {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl IdMask {
    pub fn new(width: usize, height: usize) -> Self {
        IdMask { width, height, data: vec![0; width * height] }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<u16>) -> Self {
        assert_eq!(data.len(), width * height, "mask data length mismatch");
        IdMask { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u16) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn data(&self) -> &[u16] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u16] {
        &mut self.data
    }
}

/// Binary raster; 1 marks a flagged pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct BitMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BitMask {
    pub fn new(width: usize, height: usize) -> Self {
        BitMask { width, height, data: vec![false; width * height] }
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        BitMask { width, height, data: vec![value; width * height] }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count_set(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }
}
