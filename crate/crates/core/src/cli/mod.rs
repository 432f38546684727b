//! Command-line front end: scene files, batch runs and validation suites.

pub mod config;
pub mod run;
pub mod scenes;
pub mod validate;

pub use config::{parse_scene, Drop, Impulse, SceneConfig, TankShape};
pub use run::{run_simulation, RunSummary};
pub use validate::{validate, SuiteReport};
