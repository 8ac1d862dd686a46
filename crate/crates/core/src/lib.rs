//! Two-photon polarization tomography.
//!
//! Two copies of a single-photon state interfere on a balanced beamsplitter,
//! one of them after a polarization transformation `U`. The coincidence
//! probability `(1 - F(U)) / 2` for `U` in `{I, σ1, σ2, σ3}` yields the
//! magnitudes of the Stokes parameters, the degree of polarization and a
//! purity witness that separates internal from external entanglement. Two
//! extra rotated settings plus a polarization-dependent loss recover the
//! signs.
//!
//! The coincidence statistics are produced three independent ways:
//!
//! * [`hom`]: closed-form expressions,
//! * [`circuit`]: swap-test circuits on a dense statevector simulator,
//! * [`boson`]: second-quantized creation-operator algebra with a beamsplitter.
//!
//! [`tomo`] runs the protocol on any of them, [`bench`] reproduces the
//! random-state campaigns and [`cli`] drives everything from the command line.

pub mod bench;
pub mod boson;
pub mod circuit;
pub mod cli;
mod error;
pub mod hom;
pub mod qstate;
pub mod rng;
pub mod tomo;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
