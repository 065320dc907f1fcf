//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A layer's input shape does not match what the previous layer produces.
    #[error("shape mismatch at layer {layer}: expected {expected}, found {found}")]
    ShapeMismatch {
        layer: usize,
        expected: String,
        found: String,
    },

    /// A tensor was constructed with inconsistent shape/data or non-finite values.
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    /// An activation trace was paired with a model it was not produced by.
    #[error("activation trace does not belong to this model")]
    TraceMismatch,

    /// Class index outside the model's output range.
    #[error("class index {index} out of range for {classes} classes")]
    ClassIndexOutOfRange { index: usize, classes: usize },

    /// Attribution method parameters violate their constraints.
    #[error("invalid method parameters: {0}")]
    InvalidMethodParams(String),

    /// Two grids that must share dimensions do not.
    #[error("dimension mismatch: expected {expected_rows}x{expected_cols}, found {found_rows}x{found_cols}")]
    DimensionMismatch {
        expected_rows: usize,
        expected_cols: usize,
        found_rows: usize,
        found_cols: usize,
    },

    /// No ground-truth boundary map available for an (image, class) pair.
    #[error("missing ground truth for image {image:?}, class {class:?}")]
    MissingGroundTruth { image: String, class: String },

    /// A pixel coordinate lies outside the image.
    #[error("pixel ({row},{col}) out of bounds for {rows}x{cols} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    /// Requested more top-scoring pixels than the heatmap holds.
    #[error("k={k} exceeds pixel count {available}")]
    KTooLarge { k: usize, available: usize },

    /// A file could not be parsed; `context` names the file or stream.
    #[error("parse error in {context} at {location}: {message}")]
    Parse {
        context: String,
        location: String,
        message: String,
    },

    /// A file declares a format version or construct this build does not support.
    #[error("unsupported format: {0}")]
    UnsupportedVersion(String),

    /// A pixmap declares a maxval other than 255.
    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),

    /// An emitted fixture failed its own detector ordering check.
    #[error("fixture self-test failed: {0}")]
    FixtureSelfTest(String),

    /// An argument value outside the documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(
        context: impl Into<String>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            context: context.into(),
            location: location.into(),
            message: message.into(),
        }
    }
}
