//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ScamrError>;

#[derive(Debug, Error)]
pub enum ScamrError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {dim} = {value} outside [{lo}, {hi}]")]
    OutOfDomain {
        dim: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("length mismatch between {left_name} ({left}) and {right_name} ({right})")]
    LengthMismatch {
        left_name: &'static str,
        left: usize,
        right_name: &'static str,
        right: usize,
    },

    #[error("non-finite value {value} at data index {index}")]
    NonFiniteData { index: usize, value: f64 },

    #[error("model returned non-finite value {value} at point {point:?}")]
    NonFiniteModelValue { value: f64, point: Vec<f64> },

    #[error("model evaluation failed at point {point:?}: {message}")]
    Evaluation { point: Vec<f64>, message: String },

    #[error("least squares needs M > N+1 points: M = {points}, N+1 = {terms}")]
    InsufficientPoints { points: usize, terms: usize },

    #[error("degenerate design matrix: dependent basis columns {columns:?} (multi-indices {indices:?})")]
    DegenerateDesign {
        columns: Vec<usize>,
        indices: Vec<Vec<u32>>,
    },

    #[error("unsupported sparse grid level {0}: only levels 1 and 2 are implemented")]
    UnsupportedLevel(u32),

    #[error("missing pairwise outcome for dimension pair ({0}, {1})")]
    MissingPairOutcome(usize, usize),

    #[error("no surrogate registered for subproblem dims {0:?}")]
    MissingSubproblem(Vec<usize>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<ScamrError>,
    },
}

impl ScamrError {
    /// Wrap the error with a short note saying where it was hit.
    pub fn with_context(self, context: impl Into<String>) -> Self {
        ScamrError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
