//! Streaming anomaly detection for dynamic directed graphs.
//!
//! The engine ingests a timestamped edge stream, partitions it into tumbling
//! windows, and incrementally maintains two damped-propagation node-score
//! vectors per window: one over the unweighted structure of the graph and one
//! over its edge weights. Windows are scored by the L1 magnitude of the first
//! and second discrete derivatives of those vectors, normalized per node
//! along the stream, and anomalies are attributed to the nodes that moved.

pub mod bounds;
pub mod eval;
pub mod metrics;
pub mod pipeline;
pub mod score;
pub mod stream;
pub mod synth;

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;
