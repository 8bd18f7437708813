pub mod datasets;
pub mod embedder;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod graph;
pub mod regularizer;
pub mod seed;
pub mod trainer;

pub use embedding::Embedding;
pub use error::{Error, Result};
