//! Cut norm, Gowers box norm and `L_p`-regularity certificates.

mod boxnorm;
mod cut;
pub(crate) mod enumerate;
mod regular;

pub use boxnorm::{box_average, box_norm};
pub(crate) use cut::cut_norm_on;
pub use cut::{cut_norm, cut_norm_auto, CutWitness, OracleMode, DEFAULT_BUDGET, GREEDY_RESTARTS};
pub use enumerate::cell_count;
pub use regular::{
    holder_certificate, holder_check, holder_constant, regularity_scan, CertificateKind, HolderCheck,
    RegularityCertificate, RegularityOutcome, RegularityViolation,
};
