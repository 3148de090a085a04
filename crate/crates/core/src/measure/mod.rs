//! Discrete probability spaces, edge functions and the analytic inequalities
//! they are tested against.

mod carve;
mod function;
mod inequalities;
mod space;

pub use carve::{carve_subset, carve_weights};
pub use function::EdgeFunction;
pub use inequalities::{convexity_check, martingale_sharp_check, InequalityReport};
pub use space::{atom_bound, DiscreteSpace, Face, HypergraphSystem};
