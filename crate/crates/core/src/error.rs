//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point has invalid coordinates: {0}")]
    InvalidPoint(String),

    #[error("total degree is {total}, must vanish")]
    TopologicalImbalance { total: i64 },

    #[error("charges {first} and {second} share the same position")]
    DuplicatePosition { first: usize, second: usize },

    #[error("charge {index} has degree zero (removable)")]
    RemovableCharge { index: usize },

    #[error("loop step {index} has angle jump {jump:.6} rad, too close to pi")]
    UnderResolvedLoop { index: usize, jump: f64 },

    #[error("invalid grid map: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("potential infeasible between charges {i} and {j}: |f_i - f_j| exceeds distance by {excess:.3e}")]
    InfeasiblePotential { i: usize, j: usize, excess: f64 },

    #[error("boundary charge imbalance: detected singularities have total degree {total}")]
    BoundaryChargeImbalance { total: i64 },

    #[error("cost exponent {alpha} outside (0, 1]")]
    InvalidExponent { alpha: f64 },

    #[error("invalid branched tree: {0}")]
    InvalidTree(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name, used by the CLI error channel and the C API.
    pub fn code_name(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidPoint(_) => "InvalidPoint",
            Error::TopologicalImbalance { .. } => "TopologicalImbalance",
            Error::DuplicatePosition { .. } => "DuplicatePosition",
            Error::RemovableCharge { .. } => "RemovableCharge",
            Error::UnderResolvedLoop { .. } => "UnderResolvedLoop",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::GridMismatch(_) => "GridMismatch",
            Error::InfeasiblePotential { .. } => "InfeasiblePotential",
            Error::BoundaryChargeImbalance { .. } => "BoundaryChargeImbalance",
            Error::InvalidExponent { .. } => "InvalidExponent",
            Error::InvalidTree(_) => "InvalidTree",
            Error::Unsupported(_) => "Unsupported",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Numerical(_) => "Numerical",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
