//! Command-line surface and file I/O for the streaming graph anomaly
//! detector: dataset ingestion, scoring runs, synthetic generation with
//! anomaly injection, and evaluation.

pub mod commands;
pub mod input;
pub mod output;
