//! Finite-difference laboratory for boundary gradient blow-up in the
//! superquadratic diffusive Hamilton-Jacobi equation
//! `u_t = Δu + |∇u|^p` (`p > 2`) with Dirichlet conditions.

// Validation is written as `!(x > 0.0)` throughout so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod barriers;
pub mod continuation;
pub mod error;
pub mod geometry;
pub mod io;
pub mod profiles;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{DomainSpec, Face, Grid, Point};
pub use profiles::Constants;
pub use solver::{Field, RunRecord, SolverConfig, StopReason};
