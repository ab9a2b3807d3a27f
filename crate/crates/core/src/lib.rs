//! Exact analysis of counterfactual invariance in discrete structural causal models.
//!
//! All probabilities are arbitrary-precision rationals; invariance checks compare
//! against one with zero tolerance.

pub mod canon;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod graph;
pub mod invariance;
pub mod polytope;
pub mod random;
pub mod rational;
pub mod scm;

pub use error::{Error, Result};
pub use rational::Rational;
