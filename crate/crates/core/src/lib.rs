//! Simulation of leakage protection for controlled subspaces in small open
//! quantum systems.
//!
//! A controlled subspace (here a single level |0>) couples weakly, with
//! strength xi, into an outside space that can carry strong drives (omega)
//! and spontaneous decay (gamma). This crate builds the chain schemes,
//! derives their closed expectation-value rate systems over the generalized
//! Gell-Mann basis, integrates both the rate systems and the full Lindblad
//! master equation, unravels the dissipative schemes into quantum-jump
//! trajectories with light/dark period statistics, and predicts protection
//! statically from the dark states of the fast dynamics.
//!
//! Everything uses hbar = 1, energies in units of xi and times in 1/xi.

pub mod analytic;
pub mod analyzer;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod operator;
pub mod rate;
pub mod trajectory;

pub use analyzer::{bright_dark_rewrite, effective_hamiltonian, find_dark_states, DarkStateReport};
pub use dynamics::{
    expectations_of, integrate_master_equation, integrate_rate_system, uniform_grid, DensityMatrix,
    TimeSeries,
};
pub use error::{Error, Result};
pub use model::{
    build_model, canonical_split, interaction_picture, DriveTerm, LevelScheme, ModelKind,
    ModelParams,
};
pub use ode::SolverOptions;
pub use operator::{commutator, expand_in_basis, gell_mann_basis, Operator, OperatorBasis};
pub use rate::{adjoint_generator, derive_rate_system, RateSystem};
pub use trajectory::{
    dark_period_stats, default_dark_threshold, run_ensemble, run_trajectory, EnsembleOptions,
    EnsembleResult, JumpRecord, StateVector, TrajectoryResult, TrajectoryStats,
};
