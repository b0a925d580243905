//! Crop-pest-awareness dynamics with awareness-driven pest control.
//!
//! The crate covers forward simulation, equilibrium location, local stability
//! via Routh-Hurwitz and eigenvalues, Hopf scanning in the attack rate, and
//! optimal control by the forward-backward sweep.

pub mod control;
pub mod equilibria;
pub mod error;
pub mod hopf;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod stability;

pub use error::{Error, Result};
pub use model::{jacobian, rhs, rhs_controlled, ControlTriple, ModelParams, State, StateDerivative};
