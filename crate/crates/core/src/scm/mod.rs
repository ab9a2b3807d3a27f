//! Discrete structural causal models evaluated exactly by noise enumeration.

mod dag;
mod distribution;
mod domain;
mod model;
mod query;

pub use dag::CausalDag;
pub use distribution::{assignments, ExactDistribution};
pub use domain::{FiniteDomain, Variable};
pub use model::{DiscreteScm, Intervention, NoiseSpec, TabularMechanism, ValidationReport, Violation};
pub use query::{resolve_intervention, Clause, Comparison, CounterfactualQuery, ResolvedQuery};
