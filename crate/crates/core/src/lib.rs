//! Mixup-based oversampling for class-imbalanced node classification on graphs.
//!
//! The pipeline: a semantic feature extractor disentangles per-node features
//! across K learned relation graphs; synthetic minority nodes are generated by
//! convex interpolation in that embedding space; an edge predictor trained
//! with adjacency reconstruction plus local/global path pretext tasks wires
//! the new nodes into the graph; and a tabular Q-learning agent adapts the
//! per-class upsampling scale during training. Classic oversampling baselines
//! and evaluation metrics are included for comparison.

pub mod config;
pub mod edge;
pub mod error;
pub mod mat;
pub mod extractor;
pub mod graph;
pub mod metrics;
pub mod mixup;
pub mod nn;
pub mod params;
pub mod rl;
pub mod sbm;
pub mod trainer;
pub mod tape;

pub use error::{Error, Result};
pub use mat::Mat;
