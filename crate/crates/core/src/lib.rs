//! Hybrid free-surface liquid simulation: a particle-grid (FLIP) solver in a
//! movable box, coupled to a boundary-element solver for the surrounding
//! liquid surface.

pub mod bem;
pub mod coupling;
pub mod error;
pub mod flip;
pub mod geom;
pub mod grids;
pub mod cli;
pub mod harness;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
