//! Spin-1 quantum annealing and trit simulated annealing on open chains.
//!
//! The crate is organised around a shared problem definition
//! ([`ChainInstance`]) and its classical cost function:
//!
//! - [`spin1`]: spin-1 operators, base-3 basis indexing, the diagonal problem
//!   Hamiltonian and the closed-form single-site driver rotation.
//! - [`schedule`]: the `g(t) = c / f(t)` driver schedules and their derivatives.
//! - [`evolve`]: fourth-order Suzuki-Trotter evolution with step halving.
//! - [`anneal`]: single-site Metropolis annealing over trit configurations.
//! - [`spectrum`]: instantaneous spectra, gap scans, adiabatic estimate and
//!   Landau-Zener excitation probability.
//! - [`landscape`]: one-step basin decomposition of the classical landscape.
//! - [`sweep`]: the `(J, D)` grid comparison of the two annealers.
//! - [`cli`]: the command-line front end.

pub mod anneal;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod landscape;
pub mod schedule;
pub mod spectrum;
pub mod spin1;
pub mod state;
pub mod sweep;

pub use error::{Error, Result};
pub use schedule::{Profile, Schedule};
pub use spin1::{BasisIndex, ChainInstance, TritConfig};
pub use state::QuantumState;

/// Largest chain length for which dense `3^N` state vectors are built.
pub const MAX_SITES: usize = 12;

/// Energies closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Reduced Planck constant in the natural units used throughout.
pub const HBAR: f64 = 1.0;
