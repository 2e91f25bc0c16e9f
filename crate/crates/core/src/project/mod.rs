//! Project files and the end-to-end pipeline.

pub mod config;
pub mod pipeline;
pub mod report;

pub use config::{validate_config, ProjectConfig, SCHEMA_VERSION};
pub use pipeline::{evaluate_project, run_pipeline, ProjectResults, RunManifest, BASELINE};
