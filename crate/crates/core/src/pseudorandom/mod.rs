//! Pseudorandom majorant families: the direct conditions, the finitely
//! checkable linear-forms route, moment estimates and test generators.
//!
//! The local linear forms condition quantifies over every function dominated
//! by the majorants and cannot be checked directly; it is certified only
//! through (P1)/(P2).

mod direct;
mod family;
pub(crate) mod forms;
mod generators;

pub use direct::{check_direct, combined_status, majorant_regularity, moment_checks, MomentCase, MomentEvent, MomentReport};
pub use family::{marginal, ConditionId, ConditionReport, PseudorandomFamily, Status, Witness};
pub use forms::{check_linear_forms, p1_integral, p2_integral, LinearFormsReport};
pub use generators::{perturbed_majorant, random_set_majorant};
