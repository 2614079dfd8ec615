//! 16-bit binary PGM (P5) used for raw Bayer mosaics. Samples are big-endian
//! per the netpbm convention.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::FormatError;

pub struct Pgm16 {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u16>,
}

pub fn write_pgm16(path: &Path, width: usize, height: usize, samples: &[u16]) -> Result<(), FormatError> {
    if samples.len() != width * height {
        return Err(FormatError::Malformed("PGM sample count mismatch".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{width} {height}\n65535\n")?;
    for s in samples {
        out.write_all(&s.to_be_bytes())?;
    }
    Ok(())
}

pub fn read_pgm16(path: &Path) -> Result<Pgm16, FormatError> {
    let mut data = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut data)?;
    parse(&data).map_err(|e| e.with_path(path))
}

fn parse(data: &[u8]) -> Result<Pgm16, FormatError> {
    let mut pos = 0usize;
    let mut token = |data: &[u8]| -> Result<String, FormatError> {
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            // netpbm comments run to end of line.
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(FormatError::Malformed("truncated PGM header".into()));
        }
        if pos < data.len() {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&data[start..pos - 1]).into_owned())
    };

    if token(data)? != "P5" {
        return Err(FormatError::Malformed("not a binary PGM".into()));
    }
    let width: usize =
        token(data)?.parse().map_err(|_| FormatError::Malformed("bad PGM width".into()))?;
    let height: usize =
        token(data)?.parse().map_err(|_| FormatError::Malformed("bad PGM height".into()))?;
    let maxval: u32 =
        token(data)?.parse().map_err(|_| FormatError::Malformed("bad PGM maxval".into()))?;
    if maxval != 65535 {
        return Err(FormatError::Unsupported("only 16-bit PGM mosaics are supported"));
    }
    let expected = width * height * 2;
    if data.len() < pos + expected {
        return Err(FormatError::Malformed("truncated PGM payload".into()));
    }
    let samples = data[pos..pos + expected]
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Ok(Pgm16 { width, height, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let samples: Vec<u16> = (0..12).map(|i| (i * 5000 + 17) as u16).collect();
        write_pgm16(&path, 4, 3, &samples).unwrap();
        let back = read_pgm16(&path).unwrap();
        assert_eq!((back.width, back.height), (4, 3));
        assert_eq!(back.samples, samples);
    }

    #[test]
    fn comments_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        let mut bytes = b"P5\n# a comment\n2 1\n65535\n".to_vec();
        bytes.extend_from_slice(&100u16.to_be_bytes());
        bytes.extend_from_slice(&60000u16.to_be_bytes());
        std::fs::write(&path, bytes).unwrap();
        let back = read_pgm16(&path).unwrap();
        assert_eq!(back.samples, vec![100, 60000]);
    }
}
