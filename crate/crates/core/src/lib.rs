//! Simulation and analysis of quantum ticking clocks.

pub mod clock_model;
pub mod discrete_maps;
pub mod error;
pub mod evolution;
pub mod numerics;
pub mod statistics;
pub mod structure_lab;
pub mod trajectories;

pub use error::{Error, Result};
