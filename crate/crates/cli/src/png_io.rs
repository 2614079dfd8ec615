//! PNG adapters: 8-bit sRGB images and 16-bit id masks.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use solo_core::raster::{IdMask, Raster};

use crate::error::FormatError;

fn open(path: &Path) -> Result<DynamicImage, FormatError> {
    image::open(path).map_err(|e| FormatError::Malformed(e.to_string()).with_path(path))
}

/// Reads an 8-bit RGB image as a [0, 1] float raster.
pub fn read_rgb8(path: &Path) -> Result<Raster, FormatError> {
    let img = open(path)?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut out = Raster::new(w, h, 3);
    for (x, y, pixel) in img.enumerate_pixels() {
        for c in 0..3 {
            out.set(x as usize, y as usize, c, pixel[c] as f64 / 255.0);
        }
    }
    Ok(out)
}

pub fn write_rgb8(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<(), FormatError> {
    let img: ImageBuffer<Rgb<u8>, _> =
        ImageBuffer::from_raw(width as u32, height as u32, data.to_vec())
            .ok_or(FormatError::Unsupported("buffer size does not match dimensions"))?;
    img.save(path).map_err(|e| FormatError::Malformed(e.to_string()).with_path(path))
}

/// Reads a 16-bit grayscale PNG of ids.
pub fn read_mask16(path: &Path) -> Result<IdMask, FormatError> {
    let img = open(path)?.to_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut out = IdMask::new(w, h);
    for (x, y, pixel) in img.enumerate_pixels() {
        out.set(x as usize, y as usize, pixel[0]);
    }
    Ok(out)
}

pub fn write_mask16(path: &Path, mask: &IdMask) -> Result<(), FormatError> {
    let img: ImageBuffer<Luma<u16>, _> = ImageBuffer::from_raw(
        mask.width() as u32,
        mask.height() as u32,
        mask.data().to_vec(),
    )
    .ok_or(FormatError::Unsupported("buffer size does not match dimensions"))?;
    img.save(path).map_err(|e| FormatError::Malformed(e.to_string()).with_path(path))
}

/// Reads the light mask: a 16-bit RGB PNG with the category id in the red
/// channel and the light-instance id in the green channel.
pub fn read_light_mask16(path: &Path) -> Result<(IdMask, IdMask), FormatError> {
    let img = open(path)?.to_rgb16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut categories = IdMask::new(w, h);
    let mut instances = IdMask::new(w, h);
    for (x, y, pixel) in img.enumerate_pixels() {
        categories.set(x as usize, y as usize, pixel[0]);
        instances.set(x as usize, y as usize, pixel[1]);
    }
    Ok((categories, instances))
}

pub fn write_light_mask16(path: &Path, categories: &IdMask, instances: &IdMask) -> Result<(), FormatError> {
    assert_eq!((categories.width(), categories.height()), (instances.width(), instances.height()));
    let (w, h) = (categories.width(), categories.height());
    let mut data = Vec::with_capacity(w * h * 3);
    for i in 0..w * h {
        data.push(categories.data()[i]);
        data.push(instances.data()[i]);
        data.push(0);
    }
    let img: ImageBuffer<Rgb<u16>, _> = ImageBuffer::from_raw(w as u32, h as u32, data)
        .ok_or(FormatError::Unsupported("buffer size does not match dimensions"))?;
    img.save(path).map_err(|e| FormatError::Malformed(e.to_string()).with_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask16_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ids.png");
        let mut mask = IdMask::new(5, 4);
        for (i, v) in mask.data_mut().iter_mut().enumerate() {
            *v = (i * 997) as u16;
        }
        write_mask16(&path, &mask).unwrap();
        assert_eq!(read_mask16(&path).unwrap(), mask);
    }

    #[test]
    fn light_mask_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lights.png");
        let mut cats = IdMask::new(3, 3);
        let mut insts = IdMask::new(3, 3);
        cats.set(1, 1, 7);
        insts.set(1, 1, 42);
        write_light_mask16(&path, &cats, &insts).unwrap();
        let (c, i) = read_light_mask16(&path).unwrap();
        assert_eq!(c, cats);
        assert_eq!(i, insts);
    }

    #[test]
    fn rgb8_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let data: Vec<u8> = (0..4 * 2 * 3).map(|i| (i * 11) as u8).collect();
        write_rgb8(&path, 4, 2, &data).unwrap();
        let raster = read_rgb8(&path).unwrap();
        for (i, byte) in data.iter().enumerate() {
            assert!((raster.data()[i] - *byte as f64 / 255.0).abs() < 1e-12);
        }
    }
}
