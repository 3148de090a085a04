use thiserror::Error;

/// Errors raised by the library. Messages name the offending index or value so
/// that instance files can be fixed without re-running a search.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("space {space}: probabilities sum to {sum}, expected 1")]
    ProbabilitySum { space: usize, sum: f64 },

    #[error("space {space}: invalid probability {value} at point {point}")]
    InvalidProbability { space: usize, point: usize, value: f64 },

    #[error("space {space}: duplicate point label {label:?}")]
    DuplicatePoint { space: usize, label: String },

    #[error("invalid hypergraph: {0}")]
    InvalidSystem(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("face mismatch: {0}")]
    FaceMismatch(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("negative value {value} at index {index} where a nonnegative function is required")]
    Negative { index: usize, value: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("cell {cell} has zero measure")]
    ZeroMeasureCell { cell: usize },

    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exceeded: {needed} evaluations required, budget is {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },

    #[error("not a martingale difference sequence: {0}")]
    NotMartingale(String),

    #[error("iteration cap of {cap} steps exceeded")]
    IterationCap { cap: usize },

    #[error("energy increment assertion failed: increment {increment} < {required}")]
    IncrementTooSmall { increment: f64, required: f64 },

    #[error("lemma bound violated: {0}")]
    LemmaViolation(String),

    #[error("domination violated on edge {edge} at point {point:?}: f = {f}, nu = {nu}")]
    Domination { edge: usize, point: Vec<usize>, f: f64, nu: f64 },

    #[error("no certified solution: {0}")]
    NoCertifiedSolution(String),

    #[error("pipeline stage `{stage}` failed verification: {detail}")]
    Stage { stage: &'static str, detail: String },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
