//! Quantum steering ellipsoids and maximal steered coherence for a qubit
//! that decoheres in a Lorentzian reservoir shared with auxiliary qubits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod numerics;
pub mod oracles;
pub mod reservoir;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
