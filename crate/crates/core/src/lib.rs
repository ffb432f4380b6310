//! Numerical tools for interacting photons in coupled-resonator arrays.
//!
//! The crate covers exact diagonalization of Bose-Hubbard, Jaynes-Cummings-Hubbard,
//! Harper and synthetic-gauge lattices, mean-field phase diagrams, Lindblad
//! dynamics with steady states, time-domain spectroscopy emulation, and
//! transmon circuit parameters.
//!
//! Energies are angular frequencies with hbar = 1 unless a function says
//! otherwise.

pub mod circuitq;
pub mod error;
pub mod fockspace;
pub mod jcsingle;
pub mod lindblad;
pub mod linalg;
pub mod meanfield;
pub mod models;
pub mod ode;
pub mod operator;
pub mod spectroscopy;

pub use error::{Error, Result};
pub use fockspace::{FockBasis, LadderKind, NumberSector, SiteSpec};
pub use linalg::{diagonalize, evolve_unitary, EvolutionMethod, Spectrum};
pub use operator::{Operator, Symmetry, C64};
