//! Design and analysis of two MEMS band-pass filter topologies: an RC filter
//! built from a parallel-plate varactor and a serpentine resistor, and an
//! electrostatically driven cantilever resonator.
//!
//! All quantities are SI. [`units`] handles display conversions.

pub mod beam;
pub mod damping;
pub mod electrostatics;
pub mod error;
pub mod filters;
pub mod io;
pub mod materials;
pub mod measurement;
pub mod sweep;
pub mod synthesis;
pub mod units;

pub use error::{Error, Result};
