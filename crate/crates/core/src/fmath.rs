//! Thin wrappers over libm so the crate builds without std.

pub use libm::{atan2, cbrt, ceil, cos, exp, exp2, fabs, floor, log, pow, round, sin, sqrt};
