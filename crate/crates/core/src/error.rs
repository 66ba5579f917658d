use thiserror::Error;

use crate::model::ModelViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid outcome model: {}", format_violations(.0))]
    InvalidModel(Vec<ModelViolation>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity exceeded: {atoms} atoms requested, budget is {budget}")]
    Capacity { atoms: u64, budget: u64 },

    #[error("enumeration budget exceeded: {required} weighted terms required, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

fn format_violations(v: &[ModelViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
