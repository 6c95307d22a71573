//! Symbolic verification workbench for exterior differential systems:
//! closed-ideal certificates, sectioning to PDEs, Wahlquist-Estabrook
//! prolongation (curvature) conditions, Lie bracket algebra auditing,
//! conservation laws, and Backlund transformation checks.

pub mod backlund;
pub mod conserve;
pub mod error;
pub mod exterior;
pub mod liealg;
pub mod numeric;
pub mod parse;
pub mod prolong;
pub mod report;
pub mod scalar;

pub use error::EdsError;
