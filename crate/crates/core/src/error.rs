use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation: {0}")]
    Validation(String),

    #[error("empty corpus: statistics are undefined for N = 0")]
    EmptyCorpus,

    #[error("cannot split: {0}")]
    CannotSplit(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("training: {0}")]
    Training(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Prefixes the error with the pipeline stage that raised it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::EmptyCorpus => "empty-corpus",
            Error::CannotSplit(_) => "cannot-split",
            Error::UndefinedMetric(_) => "undefined-metric",
            Error::Training(_) => "training",
            Error::Divergence { .. } => "divergence",
            Error::ModelFormat(_) => "model-format",
            Error::Config(_) => "config",
            Error::Stage { source, .. } => source.kind(),
        }
    }
}
