//! Supervised training, evaluation with the per-kind accuracy breakdown,
//! prediction with explanation bundles, and run configuration.

mod config;
mod evaluate;
mod predict;
mod prepare;
mod train;

pub use config::{RunConfig, TrainConfig};
pub use evaluate::{evaluate, evaluate_prepared, BucketStat, EvalReport, PredictionRecord};
pub use predict::{predict, CandidateExplanation, PredictBundle};
pub use prepare::{build_instance, prepare_questions, union_diagrams, PreparedQuestion};
pub use train::{train_supervised, EpochMetrics, TrainOutput};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Retrieval(#[from] crate::retrieval::RetrievalError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Ssoc(#[from] crate::ssoc::SsocError),
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
    #[error(transparent)]
    Checkpoint(#[from] crate::numerics::checkpoint::CheckpointError),
    #[error("unknown question {0}")]
    UnknownQuestion(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
