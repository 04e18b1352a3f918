//! Tachibana, Killing, planarity and Betti numbers of model compact
//! Riemannian manifolds, computed as kernel dimensions of assembled
//! quadratic forms on spectral bases of differential forms.

pub mod cli;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod harmonics;
pub mod invariants;
pub mod operators;
pub mod oracles;
pub mod quadrature;

pub use error::{Error, Result};
