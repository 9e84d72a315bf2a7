//! Time-dependent coefficients of the scalar Hamiltonian system and the
//! structural constants derived from them.

mod analysis;
mod function;
mod json;
pub mod reference;
mod set;

use thiserror::Error;

pub use analysis::{
    all_eigen_norms, check_all_eigen_condition, envelopes, envelopes_default, lambda_b,
    monotonicity_beta, pointwise_margin, symmetric_eigenvalues, validate, validation_grid,
    AllEigenNorms, Constraint, Envelopes, ValidationReport, Violation, DEFAULT_GRID,
    STRUCTURAL_TOL,
};
pub use function::{CoefficientFn, FnKind};
pub use json::{parse_coefficient_set, CoefficientSpec, FunctionSpec, SystemSpec};
pub use set::{CoefficientSet, Pointwise};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoeffError {
    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("invalid knots: {0}")]
    InvalidKnots(String),
    #[error("invalid coefficient data: {0}")]
    Shape(String),
    #[error("coefficient is discontinuous at knot {knot} (jump {jump:e})")]
    Discontinuous { knot: f64, jump: f64 },
    #[error("time {t} lies beyond the horizon {horizon}")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("cannot parse coefficient document: {0}")]
    Parse(String),
    #[error("envelopes infeasible: {0}")]
    EnvelopeInfeasible(String),
}
