//! Core algorithms for monocular day-to-night relighting: depth refinement,
//! mesh reconstruction, probabilistic light instantiation, diffuse path
//! tracing, and camera ISP simulation.
//!
//! The crate is `no_std` + `alloc`; all file formats and orchestration live in
//! the companion CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod camera;
pub mod color;
pub mod depth;
pub mod error;
pub mod fmath;
pub mod illuminant;
pub mod isp;
pub mod math;
pub mod pipeline;
pub mod raster;
pub mod lights;
pub mod mesh;
pub mod resample;
pub mod rng;
pub mod tracer;

pub use error::CoreError;
