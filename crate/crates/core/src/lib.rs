//! Regularity decompositions of weighted hypergraph systems relative to
//! pseudorandom majorants, and what follows from them: counting, relative
//! removal and arithmetic progressions in sparse subsets of `Z_n`.
//!
//! Everything works on finite product spaces. The math is generic over
//! [`scalar::Scalar`] (`f32` or `f64`); the aliases below fix `f64`, which is
//! what the command-line front end uses.

pub mod contraction;
pub mod counting;
pub mod error;
pub mod geometry;
pub mod measure;
pub mod norms;
pub mod params;
pub mod pseudorandom;
pub mod regularity;
pub mod scalar;
pub mod zn;

pub use error::{Error, Result};
pub use norms::OracleMode;
pub use pseudorandom::{ConditionId, Status};
pub use regularity::GrowthFunction;
pub use scalar::Scalar;

pub type DiscreteSpace = measure::DiscreteSpace<f64>;
pub type Face = measure::Face<f64>;
pub type HypergraphSystem = measure::HypergraphSystem<f64>;
pub type EdgeFunction = measure::EdgeFunction<f64>;
pub type BoxCell = geometry::BoxCell<f64>;
pub type BoxPartition = geometry::BoxPartition<f64>;
pub type CutWitness = norms::CutWitness<f64>;
pub type Decomposition = regularity::Decomposition<f64>;
pub type PseudorandomFamily = pseudorandom::PseudorandomFamily<f64>;
pub type ConditionReport = pseudorandom::ConditionReport<f64>;
pub type RemovalResult = counting::RemovalResult<f64>;
pub type ZnWeight = zn::ZnWeight<f64>;
