//! Error type shared by all engines.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not a projector (idempotency residual {0:.3e})")]
    NotProjector(f64),

    #[error("operator basis needs dimension >= 2, got {0}")]
    BasisDimension(usize),

    #[error("unknown model name `{0}`")]
    UnknownModel(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error(
        "drive term |{bra}><{ket}| at frequency {frequency} is not resonant \
         (interaction picture residual {residual:.3e})"
    )]
    NonResonant {
        bra: usize,
        ket: usize,
        frequency: f64,
        residual: f64,
    },

    #[error("derived rate coefficient has imaginary residual {0:.3e}")]
    ImaginaryResidual(f64),

    #[error("solver step failed at t = {0}")]
    SolverFailure(f64),

    #[error("density matrix lost positivity at t = {t}: min eigenvalue {min_eigenvalue:.3e}")]
    PositivityLoss { t: f64, min_eigenvalue: f64 },

    #[error("state invariant violated at t = {t}: {what}")]
    StateInvariant { t: f64, what: String },

    #[error("no steady state: {0}")]
    NoSteadyState(String),

    #[error("scheme has no collapse channels; nothing to unravel")]
    NoDissipation,

    #[error("no trajectories to analyse")]
    EmptyEnsemble,

    #[error("hamiltonian split does not reproduce the scheme hamiltonian (residual {0:.3e})")]
    SplitMismatch(f64),

    #[error("operation requires a {expected} scheme")]
    WrongScheme { expected: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
