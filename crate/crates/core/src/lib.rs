//! Quasi-periodic solutions of nearly-integrable Hamiltonian systems.
//!
//! The solver alternates a frequency update from the resonant equations with
//! a Newton step on the non-resonant Fourier coefficients, growing the lattice
//! box by a fixed factor every iteration. Diagnostics check small-divisor and
//! localization conditions; symplectic-Euler baselines quantify the phase
//! drift the spectral solution avoids.

pub mod baselines;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub mod operator;
pub mod solver;

pub use error::{Error, Result};
pub use exec::Exec;
pub use hamiltonian::{Monomial, PolynomialHamiltonian};
pub use lattice::{FourierVector, LatticeBox, ModeIndex, ModeOrder, MultiIndex};
pub use solver::{SolverConfig, SolverState};
