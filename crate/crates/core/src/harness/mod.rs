//! Campaign orchestration: seeds in, mutants through refinement and an
//! external target, metrics and artifacts out.

mod campaign;
mod config;
mod metrics;
mod report;
mod target;

use std::path::PathBuf;

use thiserror::Error;

pub use campaign::{run_campaign, Campaign};
pub use config::{CampaignConfig, LabelMode, TargetSpec, INPUT_PLACEHOLDER, SEED_ENV};
pub use metrics::{
    chamfer_distance, graph_distance, mutation_diversity, pairwise_distances, semantic_preservation, Summary,
    MAX_EXACT_PAIRS, SAMPLED_PAIRS,
};
pub use report::{
    emit_report, read_report, CampaignReport, EtiMs, MutantRow, ReportFormat, SkippedSeed, StageMs, SummaryStats,
};
pub use target::{execute_target, Execution, RejectReason};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid campaign config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("could not start `{command}`: {source}")]
    Spawn { command: String, source: std::io::Error },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Metric(String),
    #[error(transparent)]
    Convert(#[from] crate::convert::ConvertError),
    #[error(transparent)]
    Dsl(#[from] crate::dsl::DslError),
    #[error(transparent)]
    Refine(#[from] crate::refine::RefineError),
    #[error(transparent)]
    Mutation(#[from] crate::mutate::MutationError),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
