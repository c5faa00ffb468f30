//! Forward spectral analysis for matrix quadratic differential pencils on
//! the interval [0, pi]:
//!
//!   Y'' + (rho^2 I + 2 i rho Q1(x) + Q0(x)) Y = 0,
//!   U(Y) = Y'(0) + (i rho h1 + h0) Y(0),
//!   V(Y) = Y'(pi) + (i rho H1 + H0) Y(pi),
//!
//! with m x m complex matrix coefficients and the spectral parameter in the
//! boundary conditions. The crate computes fundamental solutions, Weyl
//! solutions and the Weyl matrix (by two independent routes), eigenvalues
//! with residue data via the argument principle, transport-matrix identity
//! suites, leading-order asymptotics with remainder-decay regression, and
//! the block-matrix machinery used to compare two pencils.

pub mod asympt;
pub mod error;
pub mod fundamental;
pub mod generator;
pub mod linalg;
pub mod ode;
pub mod pencil;
pub mod spectra;
pub mod uniqueness;
pub mod volterra;

pub use error::{Error, FailureClass, Result};
pub use linalg::{CMatrix, CVector};
pub use ode::{
    bracket, integrate_pencil_ode, integrate_pencil_ode_on, solve_transport, Bracket, Direction,
    IntegrationSettings, MatFunction, Side, Trajectory, TransportFamily, TransportKind,
};
pub use pencil::{
    boundary_form, eval_coefficients, validate_pencil, BoundaryKind, CoefficientFunction, Pencil,
    ValidationReport,
};
