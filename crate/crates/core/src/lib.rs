//! Pseudo-spectral 2D incompressible Euler on the torus [-1,1)^2 with
//! instrumentation for critical Sobolev norm growth of odd-odd vorticity.

pub mod analysis;
pub mod error;
pub mod evolution;
pub mod fields;
pub mod flow_map;
pub mod initial_data;
pub mod spectral;

pub use error::{Error, Result};
pub use fields::{Point, PolarPatch, Symmetry, VelocityField, VorticityField};
pub use spectral::{Grid, SpectralField};
