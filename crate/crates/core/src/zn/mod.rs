//! The cyclic-group case: arithmetic-progression systems over `Z_n`, progression
//! averages, the cyclic pseudorandomness conditions and a relative Szemerédi demo.
//!
//! Only multiplication maps `x ↦ a_j x` on `Z_n` are supported.

mod average;
mod demo;
mod pseudo;
mod system;
mod weight;

pub use average::{ap_average, ApMode};
pub use demo::{relative_szemeredi_demo, SzemerediReport};
pub use pseudo::{check_zn_pseudo, zn_family, ZnEvaluation, ZnPseudoParams, ZnPseudoReport};
pub use system::{build_ap_system, check_generation, default_coeffs, ApSystem};
pub use weight::{gen_majorant, MajorantKind, ZnWeight};
