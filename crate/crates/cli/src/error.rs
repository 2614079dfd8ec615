//! Error types for file parsing and scene validation.

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Unsupported(&'static str),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("{path}: {source}")]
    At {
        path: PathBuf,
        #[source]
        source: Box<FormatError>,
    },
}

impl FormatError {
    pub fn with_path(self, path: &Path) -> FormatError {
        FormatError::At { path: path.to_path_buf(), source: Box::new(self) }
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("scene manifest: {0}")]
    Manifest(String),
    #[error("{map}: dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch { map: &'static str, expected: (usize, usize), got: (usize, usize) },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("non-positive depth")]
    NonPositiveDepth,
    #[error("normals are not unit length (|n| = {0})")]
    NonUnitNormals(f64),
    #[error("albedo outside [0, 1] (value {0})")]
    AlbedoOutOfRange(f64),
    #[error("light mask carries unknown category id {0}")]
    UnknownLightCategory(u16),
    #[error("invalid intrinsics: fx and fy must be positive")]
    InvalidIntrinsics,
    #[error(transparent)]
    Core(#[from] solo_core::CoreError),
}
