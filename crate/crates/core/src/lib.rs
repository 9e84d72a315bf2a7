//! Spectral analysis of Hamiltonian-type linear FBSDE eigenvalue problems
//! through reduced Riccati equations and their blow-up chains.

pub mod chain;
pub mod coeffs;
pub mod fbsde;
pub mod riccati;
pub mod scalar;
pub mod spectrum;

pub use scalar::Scalar;

pub type CoefficientSetF64 = coeffs::CoefficientSet<f64>;
pub type CoefficientSetF32 = coeffs::CoefficientSet<f32>;
pub type BlowupChainF64 = chain::BlowupChain<f64>;
pub type RiccatiSolutionF64 = riccati::RiccatiSolution<f64>;
pub type EigenvalueF64 = spectrum::Eigenvalue<f64>;
