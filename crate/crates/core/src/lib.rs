//! Fock-space simulation and calibration of quantum gates built from
//! photonic-crystal coupled-cavity waveguides doped with two- and
//! three-level emitters.

pub mod effective;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod gates;
pub mod hamiltonians;
pub mod operator;
pub mod optimize;
pub mod propagator;

pub use error::{Error, Result};
