//! Cells of `S_∂e`, box partitions and the constructive partition lemmas.

mod cell;
mod lemmas;
mod partition;

pub use cell::{BoxCell, EdgeGeometry};
pub use lemmas::{enlarge_box, split_cell, split_within, Enlargement, LocalSplit, SplitOutcome};
pub use partition::{common_refinement, BoxPartition};
