use std::path::PathBuf;

use thiserror::Error;

use crate::range_image::PixelCoord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,
    #[error("no point fell inside the sensor field of view")]
    EmptyProjection,
    #[error("invalid sensor model: {0}")]
    InvalidSensor(String),
    #[error("pixels {0:?} and {1:?} are identical")]
    ZeroSeparation(PixelCoord, PixelCoord),
    #[error("depth must be positive, got {0}")]
    InvalidDepth(f64),
    #[error("grid shapes differ: {expected:?} vs {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("need at least {required} points, got {found}")]
    TooFewPoints { required: usize, found: usize },
    #[error("neighborhood covariance has rank < 2")]
    DegenerateNeighborhood,
    #[error("need at least {required} normal features, got {found}")]
    InsufficientFeatures { required: usize, found: usize },
    #[error("trajectory lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("{path}: format error at {location}: {message}")]
    Format {
        path: PathBuf,
        location: String,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(
        path: impl Into<PathBuf>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Format {
            path: path.into(),
            location: location.into(),
            message: message.into(),
        }
    }
}
