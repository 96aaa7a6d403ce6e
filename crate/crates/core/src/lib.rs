//! Simulation and closed-form analysis of heralded collective-excitation protocols
//! in waveguide QED.
//!
//! Units: `ħ = 1`, rates in units of the guided-mode rate `Γg`, times in `1/Γg`.

pub mod bandgap;
pub mod basis;
pub mod dissipative;
pub mod error;
pub mod fit;
pub mod formulas;
pub mod harness;
pub mod linalg;
pub mod optimize;
pub mod protocol;

pub use error::{Error, Result};
