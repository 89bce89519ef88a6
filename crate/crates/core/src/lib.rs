pub mod classifier;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod grid;
pub mod groundstate;
pub mod ode;
pub mod propagator;
pub mod potentials;
pub mod quad;

pub use error::{Error, Result};
