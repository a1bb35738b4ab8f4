//! Landau quantization of electrons in power-law magnetic fields, the
//! resulting degenerate-electron equation of state, and magnetized white
//! dwarf structure.

pub mod constants;
pub mod dispersion;
pub mod eos;
pub mod error;
pub mod field;
pub mod interp;
pub mod ode;
pub mod qspeed;
pub mod spectrum;
pub mod stellar;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use field::{PiecewiseField, PowerLawField, Spin};
pub use spectrum::{EigenResult, QuantumState, SolverConfig};
