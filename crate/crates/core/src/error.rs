use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("edge list contains no edges")]
    EmptyGraph,

    #[error("label file contains no labels")]
    EmptyLabels,

    #[error("unknown node token `{0}`")]
    UnknownNode(String),

    #[error("node id {id} out of range for graph with {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("no usable pairs: all {skipped} candidate pairs were skipped")]
    NoUsablePairs { skipped: usize },

    #[error("{pairs} pairs requested without an explicit sample; all-pairs mode is limited to n <= {limit} (n = {n})")]
    TooManyPairs { n: usize, limit: usize, pairs: usize },

    #[error("all-pairs curvature regularization is limited to n <= {limit} nodes (n = {n}); use the sampled regularizer instead")]
    Capacity { n: usize, limit: usize },

    #[error("regularizer has no usable curvature samples ({degenerate} degenerate)")]
    EmptyRegularizer { degenerate: usize },

    #[error("non-finite {what} loss at epoch {epoch}; the learning rate is probably too high")]
    NonFinite { what: &'static str, epoch: usize },

    #[error("non-edge pool ({available}) is smaller than the {needed} negatives required")]
    NegativePoolTooSmall { available: usize, needed: usize },

    #[error("no positive examples")]
    NoPositives,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
