use std::path::PathBuf;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid topology: {}", format_violations(.0))]
    InvalidTopology(Vec<Violation>),

    #[error("capacity exceeded on cloud c{cloud}: need {needed} bytes, {free} free")]
    CapacityExceeded { cloud: usize, needed: u64, free: u64 },

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("infeasible placement: {required} replicas requested, {available} feasible clouds")]
    Infeasible { required: usize, available: usize },

    #[error("search space of {size} subsets exceeds the enumeration limit {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },

    #[error("unknown scenario `{0}` (valid: builtin:1..builtin:4 or a path to a scenario JSON file)")]
    UnknownScenario(String),

    #[error("unknown algorithm `{0}` (valid: hs, random, ga, foa, exhaustive)")]
    UnknownAlgorithm(String),

    #[error("invalid scenario: {0}")]
    InvalidSpec(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("stored totals disagree with the series: {0}")]
    InconsistentTotals(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
