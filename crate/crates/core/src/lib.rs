//! Numerical laboratory for a coupled atmospheric CO2 / GDP / forest area /
//! human population model.
//!
//! - [`model`]: parameters, vector field, Jacobian, attracting box
//! - [`equilibria`]: the four equilibria E1..E4
//! - [`stability`]: spectra, Routh-Hurwitz and the Lyapunov certificate
//! - [`integrate`]: fixed-step RK4, steady states, parameter sweeps
//! - [`sensitivity`]: Latin hypercube sampling and PRCC
//! - [`control`]: optimal abatement by forward-backward sweep
//! - [`calibration`]: growth-rate estimation from yearly data
//! - [`cli`]: the `carbonlab` command line

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod control;
pub mod equilibria;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod sensitivity;
pub mod stability;

pub use error::{Error, Result};
pub use model::{Parameters, State};
