//! Std companion of `inflab-core`: experiment configuration, file formats,
//! the persistent `mu` cache, SVG heatmaps and the pipelines driven by the
//! `inflab` command line tool.

pub mod cache;
pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod svg;

pub use error::{LabError, LabResult};
pub use inflab_core as core;
