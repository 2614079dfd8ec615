//! File formats, scene loading, configuration, and batch orchestration for
//! the day-to-night relighting pipeline. All numerics live in `solo-core`.

pub mod config;
pub mod defaults;
pub mod error;
pub mod illuminants;
pub mod mesh_ply;
pub mod pfm;
pub mod pgm;
pub mod pipeline;
pub mod png_io;
pub mod scene;
pub mod synth;
