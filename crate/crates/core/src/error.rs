use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("primitive evaluated outside its domain at {context}")]
    Domain { context: String },

    #[error("non-finite value in {term} at point {index}")]
    NonFinite { term: String, index: usize },

    #[error("point {point:?} lies outside the domain bounds")]
    OutOfBounds { point: Vec<f64> },

    #[error("point {point:?} is not on interface {interface} (|phi| = {phi:e})")]
    NotOnInterface {
        point: Vec<f64>,
        interface: usize,
        phi: f64,
    },

    #[error("point {point:?} lies on interface {interface}; a side must be selected")]
    OnInterface { point: Vec<f64>, interface: usize },

    #[error("level set `{0}` has no surface parametrization")]
    MissingParametrization(String),

    #[error("degenerate level-set gradient at {point:?}")]
    DegenerateGradient { point: Vec<f64> },

    #[error("sampling exhausted: acceptance rate {rate:e} for subdomain {subdomain}")]
    SamplingExhausted { subdomain: usize, rate: f64 },

    #[error("point is not on the domain boundary: {point:?}")]
    NotOnBoundary { point: Vec<f64> },

    #[error("unknown problem id `{0}` (valid: ex1, ex2:k=2|3|4, ex3, ex4, ex5)")]
    UnknownProblem(String),

    #[error("model/geometry mismatch: {0}")]
    Mismatch(String),

    #[error("relative error undefined: reference solution has zero norm")]
    UndefinedRelativeError,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite loss at iteration {iteration}: {source}")]
    Diverged {
        iteration: usize,
        #[source]
        source: Box<Error>,
        last_good: Vec<f64>,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
