//! Classical shadow tomography with finite-depth brick-wall random Clifford circuits.
//!
//! The crate simulates randomized measurements on stabilizer states, evolves the
//! entanglement feature of the snapshot ensemble as an MPS, solves for the shadow
//! reconstruction coefficients as a low-bond-dimension MPS, and estimates Pauli
//! observables, fidelities and shadow norms.

pub mod ef_dynamics;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod reconstruction;
pub mod shadow_norm;
pub mod stabilizer_sim;
pub mod tensor_core;

pub use error::{Error, Result};
