//! Adiabatic elimination of slow/fast Lindblad master equations in the
//! Heisenberg picture.
//!
//! The fast generator `L0` relaxes exponentially onto a kernel of
//! quasi-equilibria; a weak perturbation `ε·L1` drives slow motion inside it.
//! This crate builds the slow basis `{S_d}` and the invariant operators
//! `{J_d}` of `L0`, expands the slow generator `F(ε)` and the fast invariant
//! subspace order by order, and checks the reduced dynamics against exact
//! propagation of `L0 + ε·L1`.

pub mod error;
pub mod expansion;
pub mod fit;
pub mod lindblad;
pub mod operator;
pub mod propagate;
pub mod random;
pub mod spectral;
pub mod zoo;

pub use error::{Error, Result};
