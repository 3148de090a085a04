//! Product densities, the counting gap, truncation and the removal pipeline.

mod dense;
mod density;
mod pipeline;
mod truncate;

pub use dense::{dense_removal, intersection_is_empty, DenseRemoval};
pub use density::{
    counting_gap, cut_contract_check, cut_distances, product_density, section_marginal, CountingGap, CutContraction, GapSplit,
};
pub use pipeline::{relative_removal, ErrorTerms, LowerPartition, PipelineTrace, RemovalKnobs, RemovalResult};
pub use truncate::{truncate, Truncation};
