//! Mixed finite elements for optimal control of coupled Stokes–Darcy flow,
//! with a classical and a pressure-robust discretization.

pub mod assembly;
pub mod element;
pub mod error;
pub mod fields;
pub mod mesh;
pub mod quadrature;
pub mod reconstruction;
pub mod spaces;
pub mod system;
pub mod verify;
pub mod sparse;

pub use error::{Error, Result};
