//! Entanglement generation, manipulation and detection for two co-located qubits
//! coupled to a one-dimensional waveguide, driven by exponential single-photon
//! wavepackets.

pub mod cli;
pub mod error;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod scenarios;
pub mod single_ex;
pub mod two_ex;

pub use error::{Result, WqedError};
