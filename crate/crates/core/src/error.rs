use thiserror::Error;

/// Errors produced by the planning library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("target model missing: {0}")]
    MissingTarget(&'static str),
    #[error("path enumeration exceeded the cap of {cap} paths")]
    PathExplosion { cap: usize },
    #[error("oracle budget exceeded: {}, budget {budget}", joint_count(*needed))]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("effort cap exceeded: N = {n} > {cap}")]
    EffortOverflow { n: u64, cap: u64 },
    #[error("malformed model: {0}")]
    Model(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("plan extraction failed: {0}")]
    Extraction(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn joint_count(needed: u128) -> String {
    if needed == u128::MAX {
        "more joint plans than can be counted".into()
    } else {
        format!("{needed} joint plans")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
