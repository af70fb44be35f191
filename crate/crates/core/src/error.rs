use std::path::PathBuf;

use thiserror::Error;

use crate::clustering::ClusterError;
use crate::dataset::DataError;
use crate::evaluation::EvalError;
use crate::ontology::OntologyError;
use crate::projection::ProjectionError;

/// Process exit codes of the command-line tool.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const ONTOLOGY: i32 = 3;
    pub const INTERNAL: i32 = 4;
}

/// Pipeline stage an I/O failure belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Data,
    Ontology,
    Output,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{stage} file {}: {source}", path.display())]
    Io {
        stage: Stage,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("ontology: {0}")]
    Ontology(#[from] OntologyError),
    #[error("load: {0}")]
    Data(#[from] DataError),
    #[error("project: {0}")]
    Projection(#[from] ProjectionError),
    #[error("cluster (level {level}): {source}")]
    Cluster { level: usize, source: ClusterError },
    #[error("evaluate: {0}")]
    Evaluation(#[from] EvalError),
    #[error("internal invariant breach: {0}")]
    Internal(String),
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Data => "data",
            Stage::Ontology => "ontology",
            Stage::Output => "output",
        })
    }
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => exit::USAGE,
            Error::Io { stage, .. } => match stage {
                Stage::Config => exit::USAGE,
                Stage::Data => exit::DATA,
                Stage::Ontology => exit::ONTOLOGY,
                Stage::Output => exit::DATA,
            },
            Error::Ontology(_) => exit::ONTOLOGY,
            Error::Data(_) => exit::DATA,
            Error::Projection(_) => exit::ONTOLOGY,
            Error::Cluster { source, .. } => match source {
                ClusterError::InvalidConfig(_) => exit::USAGE,
                ClusterError::TooFewRecords { .. } | ClusterError::NonFinite => exit::DATA,
                _ => exit::INTERNAL,
            },
            Error::Evaluation(e) => match e {
                EvalError::ZeroBaseline { .. } | EvalError::NonPositiveBaseline(_) => exit::DATA,
                EvalError::AssignmentLength { .. } | EvalError::EmptyCluster(_) => exit::DATA,
                EvalError::Format(_) => exit::DATA,
                _ => exit::INTERNAL,
            },
            Error::Internal(_) => exit::INTERNAL,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
