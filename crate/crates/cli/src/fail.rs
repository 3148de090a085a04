use std::fmt;

use hypereg::Error;

/// Why a run stopped, grouped by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Malformed instance, flags or preconditions (exit 2).
    Input(String),
    /// An enumeration or iteration budget ran out (exit 3).
    Budget(String),
    /// A claimed bound failed or a witness was found (exit 1).
    Violation(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Input(_) => 2,
            Failure::Budget(_) => 3,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Failure::Violation(_) => "violation",
            Failure::Input(_) => "input-error",
            Failure::Budget(_) => "budget-exhausted",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Budget(m) | Failure::Violation(m) => m,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.status(), self.message())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::BudgetExceeded { .. } | Error::IterationCap { .. } => Failure::Budget(msg),
            Error::NotMartingale(_)
            | Error::IncrementTooSmall { .. }
            | Error::LemmaViolation(_)
            | Error::NoCertifiedSolution(_)
            | Error::Stage { .. } => Failure::Violation(msg),
            _ => Failure::Input(msg),
        }
    }
}

pub fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}
