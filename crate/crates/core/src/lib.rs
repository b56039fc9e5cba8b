//! Simulation of position-based (charge) qubits coupled to a two-mode quantum
//! electromagnetic cavity.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: dense complex matrices, Hermitian eigensolver, matrix
//!   exponential, Kronecker product and partial trace.
//! * [`signal`]: declarative time-dependent scalars used for every drive.
//! * [`qubit`]: the 2×2 tight-binding qubit.
//! * [`cavity`]: two-mode cavity model, mode functions and field operators.
//! * [`jc`]: the 4×4 Jaynes–Cummings qubit–cavity system and the energy
//!   transfer scenarios.
//! * [`network`]: two qubits sharing one cavity (8×8), position-basis
//!   interaction blocks and the renormalised Hamiltonians.
//! * [`measure`]: projectors, collapse, the communication protocol and
//!   entanglement entropy.
//! * [`scenario`] and [`output`]: configuration files, experiment dispatch and
//!   CSV emission used by the `qnetsim` binary.
//!
//! Units are natural throughout: ħ = 1, energies and angular frequencies share
//! one unit, time is its inverse.

pub mod cavity;
pub mod error;
pub mod jc;
pub mod linalg;
pub mod measure;
pub mod network;
pub mod output;
pub mod quad;
pub mod qubit;
pub mod scenario;
pub mod signal;

pub use error::{Error, Result};
pub use linalg::{BasisLabel, ComplexMatrix, StateVector, C64};
pub use signal::DriveSignal;
