//! Transmit power minimization for physical-layer broadcasting through a
//! reconfigurable intelligent surface (RIS).
//!
//! The crate provides a dense interior-point solver for the semidefinite and
//! least-norm subproblems, channel generation, the SDR and SCA alternating
//! optimizers, closed-form and semi-analytical lower bounds, baseline schemes
//! and a Monte Carlo sweep harness.

pub mod baselines;
pub mod bounds;
pub mod channel;
pub mod conic;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod phase;
pub mod sca_opt;
pub mod sdr_opt;

pub use error::{Error, Result};
