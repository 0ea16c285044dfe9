use thiserror::Error;

/// Errors reported across the SLAM pipeline.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("detection ({azimuth}, {range_bin}) out of scan bounds {n_azimuths}x{n_range_bins}")]
    OutOfBounds {
        azimuth: usize,
        range_bin: f64,
        n_azimuths: usize,
        n_range_bins: usize,
    },

    #[error("azimuth undefined at the image center pixel")]
    DegenerateAzimuth,

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("pose graph error: {0}")]
    Graph(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
