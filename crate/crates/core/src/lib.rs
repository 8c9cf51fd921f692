//! Multi-filter graph convolutional node embeddings.
//!
//! The crate covers graph loading and splitting, node2vec-style context
//! sampling, the multi-filter encoder with its gradients, the skip-gram and
//! supervised objectives, mini-batch training, and link-prediction and
//! node-classification evaluation.

pub mod error;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod objectives;
pub mod optim;
pub mod sampler;
pub mod trainer;
pub mod eval;
pub mod config;

pub use error::{Error, Result};
