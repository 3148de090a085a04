//! Energy-increment refinement, the adaptive regularity decomposition and the
//! theoretical parameter schedules.

mod decompose;
mod growth;
mod refine;
mod schedule;

pub use decompose::{decompose, Achieved, DecomposeCaps, Decomposition, EdgeDecomposition};
pub use growth::GrowthFunction;
pub use refine::{
    approximate_set, energy_loop, refine_step, Approximation, Branch, EnergyOutcome, RefineOutcome, RefineParams,
};
pub use schedule::{schedule, LogValue, ScheduleInput, ScheduleRow, ScheduleTable};
