//! Error type shared by the fallible core operations.

use alloc::string::String;

#[derive(Clone, Debug, PartialEq)]
pub enum CoreError {
    /// A raster argument had zero width or height.
    EmptyRaster,
    /// Raster or mask dimensions disagree where they must match.
    DimensionMismatch { expected: (usize, usize), got: (usize, usize) },
    /// A value that must be finite was NaN or infinite.
    NonFinite(&'static str),
    /// Depth must be strictly positive.
    NonPositiveDepth,
    /// Loss blew up during depth optimization.
    DivergedLoss { iteration: usize },
    /// An input mesh edge is shared by more than two faces.
    NonManifoldEdge { a: u32, b: u32, count: usize },
    /// A light-source category has no bounds-table row.
    UncoveredCategory(String),
    /// A light-source category has no illuminant samples.
    MissingIlluminant(String),
    /// A white point produced a zero cone response.
    DegenerateWhitePoint,
    /// Raw capture metadata with white level <= black level.
    InvalidRawLevels { black: u16, white: u16 },
    /// Unknown Bayer pattern tag.
    UnknownBayerPattern,
    /// Region for chromaticity Averaging was empty or outside the frame.
    EmptyRegion,
    /// Mean XYZ over the card region summed to zero.
    ZeroSumMean,
    /// Camera color matrix is singular.
    SingularCameraMatrix,
    /// Too many non-finite radiance samples during rendering.
    RadianceNonFinite { bad: u64, total: u64 },
}

impl core::fmt::Display for CoreError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CoreError::EmptyRaster => write!(f, "raster has zero size"),
            CoreError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {}x{}, got {}x{}", expected.0, expected.1, got.0, got.1)
            }
            CoreError::NonFinite(what) => write!(f, "non-finite {what}"),
            CoreError::NonPositiveDepth => write!(f, "non-positive depth"),
            CoreError::DivergedLoss { iteration } => {
                write!(f, "non-finite loss at iteration {iteration}")
            }
            CoreError::NonManifoldEdge { a, b, count } => {
                write!(f, "non-manifold input edge ({a}, {b}) shared by {count} faces")
            }
            CoreError::UncoveredCategory(c) => write!(f, "no activation bounds for category '{c}'"),
            CoreError::MissingIlluminant(c) => write!(f, "no illuminant samples for category '{c}'"),
            CoreError::DegenerateWhitePoint => write!(f, "degenerate white point"),
            CoreError::InvalidRawLevels { black, white } => {
                write!(f, "white level {white} must exceed black level {black}")
            }
            CoreError::UnknownBayerPattern => write!(f, "unknown Bayer pattern"),
            CoreError::EmptyRegion => write!(f, "empty annotation region"),
            CoreError::ZeroSumMean => write!(f, "region mean sums to zero"),
            CoreError::SingularCameraMatrix => write!(f, "camera color matrix is singular"),
            CoreError::RadianceNonFinite { bad, total } => {
                write!(f, "{bad} of {total} radiance samples were non-finite")
            }
        }
    }
}

impl core::error::Error for CoreError {}
