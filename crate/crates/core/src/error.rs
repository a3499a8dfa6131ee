use thiserror::Error;

/// Errors produced by mesh generation, assembly and the solvers.
#[derive(Debug, Error)]
pub enum FvemError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh generation failed at triangle {triangle}: {reason}")]
    GenerationFailed { triangle: usize, reason: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("assembly error at triangle {triangle}: {message}")]
    Assembly { triangle: usize, message: String },

    #[error("{message} (residual {residual:.3e})")]
    Numerical { message: String, residual: f64 },

    #[error("fields live on different meshes")]
    MeshMismatch,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FvemError>;

impl FvemError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FvemError::InvalidParameter(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, residual: f64) -> Self {
        FvemError::Numerical {
            message: msg.into(),
            residual,
        }
    }
}
