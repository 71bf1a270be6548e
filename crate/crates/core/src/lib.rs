//! Cut finite elements for the scalar wave equation on Cartesian grids.

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod forms;
pub mod geometry;
pub mod grid;
pub mod spectra;

pub use error::{Error, Result};
