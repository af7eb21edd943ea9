//! Steady states of a two-species magnetized plasma in a cylindrical mirror
//! trap: cutoff profiles, the velocity-space density functional, a Picard
//! solver for the self-consistent radial potential, characteristic
//! integration and a verification report.

// `!(x > 0.0)` is used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod characteristics;
pub mod config;
pub mod density;
pub mod error;
pub mod params;
pub mod potential;
pub mod profiles;
pub mod quadrature;
pub mod steady_state;
pub mod verification;

pub use error::{Error, Result};
pub use params::{PlasmaParams, Species};
pub use steady_state::{StateKind, SteadyState};
