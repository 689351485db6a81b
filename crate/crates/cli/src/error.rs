use std::path::PathBuf;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Usage(String),

    #[error("stage {stage}: {source}")]
    Numerical {
        stage: &'static str,
        #[source]
        source: gbv::Error,
    },

    #[error("missing upstream artifact {}", .0.display())]
    Missing(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Library(#[from] gbv::Error),
}

impl CliError {
    pub fn from_stage(stage: &'static str, e: gbv::Error) -> Self {
        use gbv::Error as E;
        match e {
            E::Io(_) | E::Csv(_) | E::Json(_) | E::Data(_) => Self::Library(e),
            other => Self::Numerical { stage, source: other },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Usage(_) => 2,
            Self::Numerical { .. } => 3,
            Self::Missing(_) => 4,
            Self::Io(_) | Self::Library(_) => 1,
        }
    }
}
