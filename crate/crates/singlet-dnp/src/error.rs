use thiserror::Error;

use crate::pair_dynamics::Basis;

/// Errors produced by the physics modules.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The orientation-dependent shift diverges when the electron Zeeman
    /// energy equals |D(theta)|.
    #[error("singular level shift: gamma_e*B coincides with |D(theta)| at theta = {theta} rad")]
    SingularShift { theta: f64 },

    #[error("integration window is empty")]
    EmptyWindow,

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("populations are in the {got:?} basis, expected {expected:?}")]
    WrongBasis { expected: Basis, got: Basis },

    #[error("integrator failure: {0}")]
    Integration(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
