use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The search never sampled a design within the area budget.
    #[error(
        "no valid design found within budget (best invalid overshoots area by {overshoot_pct:.1}%)"
    )]
    NoValidDesign { overshoot_pct: f64 },
    #[error("interpreter cap exceeded: layer has {macs} MACs, cap is {cap}")]
    OracleCap { macs: u64, cap: u64 },
    #[error("flat vector has {got} genes, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("sample budget exhausted ({budget} samples)")]
    BudgetExhausted { budget: u64 },
}

impl Error {
    /// Prefixes the message of input errors with `what`.
    pub fn context(self, what: &str) -> Self {
        match self {
            Error::Parse(m) => Error::Parse(format!("{what}: {m}")),
            Error::Validation(m) => Error::Validation(format!("{what}: {m}")),
            other => other,
        }
    }

    pub fn is_bad_input(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::Validation(_)
                | Error::Io(_)
                | Error::Config(_)
                | Error::LengthMismatch { .. }
        )
    }
}
