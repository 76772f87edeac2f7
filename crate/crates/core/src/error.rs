use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite data")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver failed to converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("eigenvalue {value:e} lies outside [0, 1] beyond the clamp tolerance")]
    SpectrumOutOfRange { value: f64 },

    #[error("degenerate width")]
    DegenerateWidth,

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("boundary case undefined: lambda equals M")]
    BoundaryCase,

    #[error("malformed idx file: {0}")]
    Idx(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("layer {layer}: {source}")]
    Layer {
        layer: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_layer(self, layer: impl Into<String>) -> Self {
        Error::Layer {
            layer: layer.into(),
            source: Box::new(self),
        }
    }
}
