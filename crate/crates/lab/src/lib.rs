//! Batch runner: TOML scenario configs, run manifests and verification suites.

pub mod config;
pub mod error;
pub mod run;
pub mod suites;

pub use config::ScenarioConfig;
pub use error::LabError;
pub use run::{replay, run, run_in, RunManifest};
pub use suites::{run_suite, SuiteReport, SUITES};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/lab.md")]
mod guide {}
