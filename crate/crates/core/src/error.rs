use crate::analysis::AnalysisError;
use crate::config::ConfigError;
use crate::detection::{DetectionError, TimeTagError};
use crate::dynamics::DynamicsError;
use crate::params::ParamsError;
use crate::sideband::SidebandError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Sideband(#[from] SidebandError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    TimeTag(#[from] TimeTagError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl Error {
    /// 2 for configuration errors, 3 for failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
