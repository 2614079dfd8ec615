//! Portable FloatMap reader/writer for the float rasters (depth, normals,
//! albedo, linear renders). Little-endian, rows stored bottom to top.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use solo_core::raster::Raster;

use crate::error::FormatError;

/// Writes a 1-channel ("Pf") or 3-channel ("PF") float map.
pub fn write_pfm(path: &Path, raster: &Raster) -> Result<(), FormatError> {
    let channels = raster.channels();
    if channels != 1 && channels != 3 {
        return Err(FormatError::Unsupported("PFM supports 1 or 3 channels"));
    }
    let mut out = BufWriter::new(File::create(path)?);
    let magic = if channels == 3 { "PF" } else { "Pf" };
    write!(out, "{}\n{} {}\n-1.0\n", magic, raster.width(), raster.height())?;
    for y in (0..raster.height()).rev() {
        for x in 0..raster.width() {
            for c in 0..channels {
                out.write_all(&(raster.get(x, y, c) as f32).to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_pfm(path: &Path) -> Result<Raster, FormatError> {
    let mut data = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut data)?;
    parse_pfm(&data).map_err(|e| e.with_path(path))
}

fn parse_pfm(data: &[u8]) -> Result<Raster, FormatError> {
    let mut pos = 0usize;
    let mut token = |data: &[u8]| -> Result<String, FormatError> {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(FormatError::Malformed("truncated PFM header".into()));
        }
        // Consume exactly one whitespace byte after the token.
        if pos < data.len() {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&data[start..pos - 1]).into_owned())
    };

    let magic = token(data)?;
    let channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(FormatError::Malformed(format!("bad PFM magic '{other}'"))),
    };
    let width: usize = token(data)?
        .parse()
        .map_err(|_| FormatError::Malformed("bad PFM width".into()))?;
    let height: usize = token(data)?
        .parse()
        .map_err(|_| FormatError::Malformed("bad PFM height".into()))?;
    let scale: f64 = token(data)?
        .parse()
        .map_err(|_| FormatError::Malformed("bad PFM scale".into()))?;
    let little_endian = scale < 0.0;

    let expected = width * height * channels * 4;
    if data.len() < pos + expected {
        return Err(FormatError::Malformed("truncated PFM payload".into()));
    }
    let payload = &data[pos..pos + expected];
    let mut raster = Raster::new(width, height, channels);
    let mut i = 0usize;
    for y in (0..height).rev() {
        for x in 0..width {
            for c in 0..channels {
                let bytes: [u8; 4] = payload[i..i + 4].try_into().unwrap();
                let v = if little_endian {
                    f32::from_le_bytes(bytes)
                } else {
                    f32::from_be_bytes(bytes)
                };
                raster.set(x, y, c, v as f64);
                i += 4;
            }
        }
    }
    Ok(raster)
}
