use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("capacity exceeded in {context}: {requested} > {limit}")]
    Capacity {
        context: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical contract violated: {0}")]
    Contract(String),

    #[error("unsupported scenario: {0}")]
    Capability(String),

    #[error("degenerate combination: {0}")]
    Degenerate(String),

    #[error("optimizer did not converge: gap {gap:.3e} after {iterations} iterations")]
    NonConvergence { gap: f64, iterations: usize },

    #[error("observable file: {0}")]
    ObservableFile(String),
}

impl Error {
    /// Exit-code class used by the command line front end: 2 for bad inputs,
    /// 3 for capability/capacity limits, 4 for numerical contract violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::ObservableFile(_) => 2,
            Error::Capacity { .. } | Error::Capability(_) => 3,
            Error::Shape { .. }
            | Error::Contract(_)
            | Error::Degenerate(_)
            | Error::NonConvergence { .. } => 4,
        }
    }
}
