//! Command-line pipeline and the annotation review service.

pub mod commands;
pub mod config;
pub mod pipeline;
pub mod review;

pub use config::{CliError, PipelineConfig};
