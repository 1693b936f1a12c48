//! CLI-level errors, each rendered as one machine-readable line:
//! `error[<Kind>] <message>`.

use manifold_core::MdsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Mds(#[from] MdsError),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("input file contains no data rows")]
    EmptyInput,

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Usage(String),
}

impl AppError {
    /// Stable kind tag for the machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Mds(e) => match e {
                MdsError::InvalidMatrix(_) => "InvalidMatrix",
                MdsError::ScaleMismatch { .. } => "ScaleMismatch",
                MdsError::InvalidK { .. } => "InvalidK",
                MdsError::Disconnected { .. } => "Disconnected",
                MdsError::DegenerateInput(_) => "DegenerateInput",
                MdsError::InvalidCorrection { .. } => "InvalidCorrection",
                MdsError::NumericalFailure(_) => "NumericalFailure",
                MdsError::ShapeError(_) => "ShapeError",
                MdsError::InvalidDimension { .. } => "InvalidDimension",
                MdsError::NonEmbeddableDirection { .. } => "NonEmbeddableDirection",
                MdsError::InvalidM { .. } => "InvalidM",
                MdsError::SingularLandmarkBlock => "SingularLandmarkBlock",
                MdsError::ModelFormat(_) => "ModelFormat",
                MdsError::UnsupportedRoute(_) => "UnsupportedRoute",
            },
            AppError::Parse { .. } => "ParseError",
            AppError::EmptyInput => "EmptyInput",
            AppError::Io(_) => "IoError",
            AppError::Usage(_) => "UsageError",
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
