//! End-to-end runs: data ingest, split, training, metrics and reports.

pub mod config;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod simulate;
pub mod synth;

use std::fmt;

use thiserror::Error;

use crate::featurize::io::DataIoError;
use crate::featurize::FeaturizeError;
use crate::qml::QmlError;

pub use config::{DataConfig, FeatureMode, LoadedConfig, ModelConfig, RunConfig};
pub use experiment::{evaluate_model, run_experiment, EvalReport, ExperimentOutput, MetricsReport, ModelArtifact, RunOptions};
pub use io::{ingest_features_csv, read_features_csv, write_features_csv};
pub use metrics::{accuracy, confusion, ConfusionMatrix, MetricsError, PoissonErrors};
pub use simulate::{simulate_request, SimulateRequest};
pub use synth::{synth_blobs, BlobParams};

/// Report and model file format version.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Subsample,
    Split,
    Standardize,
    Train,
    Evaluate,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Ingest => "ingest",
            Stage::Subsample => "subsample",
            Stage::Split => "split",
            Stage::Standardize => "standardize",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Data(#[from] DataIoError),
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Qml(#[from] QmlError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: StageError,
    },
}

impl PipelineError {
    pub(crate) fn stage(stage: Stage, source: impl Into<StageError>) -> Self {
        PipelineError::Stage {
            stage,
            source: source.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Whether the error is caused by invalid input rather than a failure
    /// during computation.
    pub fn is_validation(&self) -> bool {
        match self {
            PipelineError::Validation(_) => true,
            PipelineError::Io { .. } => false,
            PipelineError::Stage { source, .. } => match source {
                StageError::Data(DataIoError::Parse { .. } | DataIoError::Header { .. }) => true,
                StageError::Data(_) => false,
                StageError::Featurize(_) => true,
                StageError::Qml(QmlError::Configuration(_) | QmlError::InvalidDataset(_)) => true,
                StageError::Qml(_) | StageError::Metrics(_) | StageError::Other(_) => false,
            },
        }
    }

    /// Process exit code: 2 for invalid input, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            2
        } else {
            1
        }
    }
}
