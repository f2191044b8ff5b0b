use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state space too large: {n_tx}^{n_paths} exceeds {limit} states")]
    StateSpaceTooLarge {
        n_tx: usize,
        n_paths: usize,
        limit: usize,
    },

    #[error("observation has zero probability under the current belief (marginal {marginal:e})")]
    ZeroProbabilityObservation { marginal: f64 },

    #[error("computation budget exceeded: {what} needs {needed}, limit is {limit}")]
    BudgetExceeded {
        what: &'static str,
        needed: f64,
        limit: f64,
    },

    #[error("policy file: {0}")]
    PolicyFormat(String),

    #[error("config hash mismatch: policy was solved for {expected}, config hashes to {found}")]
    ConfigMismatch { expected: String, found: String },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
