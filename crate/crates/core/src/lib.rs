//! Schrodingerisation of parabolic PDEs through hyperbolic relaxation.

pub mod error;
pub mod evolve;
pub mod experiments;
pub mod fit;
pub mod grid;
pub mod measure;
pub mod operator;
pub mod relaxation;
pub mod schrod;
pub mod state;

pub use error::{Error, Result};
