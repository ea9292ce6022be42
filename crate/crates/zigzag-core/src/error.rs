//! Error type shared by all operations.

use thiserror::Error;

/// Errors from validation, domain restrictions and degenerate inputs.
///
/// Numeric payloads are stored as `f64` regardless of the kernel scalar.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("lambda must be a finite real number, got {0}")]
    NonFiniteLambda(f64),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid lambda window [{lo}, {hi}]")]
    InvalidWindow { lo: f64, hi: f64 },

    #[error("equation constant {0} outside [-5/4, 1]; roots are only guaranteed real there")]
    ConstantOutOfRange(f64),

    #[error("channel k={k} is singular (|c_k| = {ck_abs:e} below threshold); use the flat-band path")]
    ChannelSingular { k: usize, ck_abs: f64 },

    #[error("channel k={k} is not singular (|c_k| = {ck_abs:e}); the flat-band path does not apply")]
    ChannelNotSingular { k: usize, ck_abs: f64 },

    #[error("lambda = {lambda} is too close to the Dirichlet spectrum (|phi_1| = {phi1_abs:e}); the monodromy matrix has a pole there")]
    DirichletPole { lambda: f64, phi1_abs: f64 },

    #[error("lambda = {lambda} is not a Dirichlet eigenvalue (|phi_1| = {phi1_abs:e})")]
    NotDirichletEigenvalue { lambda: f64, phi1_abs: f64 },

    #[error("lambda = {lambda} does not satisfy F = -1 (|F+1| = {defect:e})")]
    NotAntiperiodicPoint { lambda: f64, defect: f64 },

    #[error("F' at lambda = {lambda} is below {min:e}; collapse rate is degenerate")]
    DegenerateDerivative { lambda: f64, min: f64 },

    #[error("evaluation point x = {0} outside [0, 1]")]
    XOutOfRange(f64),

    #[error("{0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
