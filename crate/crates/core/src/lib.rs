//! Affinity-graph image segmentation with maximin affinity learning.
//!
//! The pipeline: a convolutional classifier predicts a nearest-neighbor
//! affinity graph over image pixels, the graph is thresholded, and the
//! connected components of the thresholded graph are the segments. Training
//! comes in two flavors: standard per-edge affinity learning, and maximin
//! affinity learning, which trains the bottleneck (maximin) edge between
//! sampled pixel pairs so that the Rand index of the resulting segmentation
//! is optimized directly.

pub mod classifier;
pub mod error;
pub mod graph;
pub mod imagery;
pub mod maximin;
pub mod metrics;
pub mod synthgen;
pub mod trainer;

pub use error::{MalisError, Result};
pub use imagery::{AffinityGraph, Image, Segmentation};
