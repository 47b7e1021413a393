//! Lossless compressed formats for sparse Boolean matrices that multiply
//! by dense vectors without decompressing, and a multithreaded PageRank
//! driver with time, memory and energy instrumentation.
//!
//! Formats: [`csr`] (uncompressed baseline), [`k2tree`], [`grammar`]
//! (RePair, `re32` and `reiv` packings) and [`refcopy`] (reference-copy
//! adjacency lists). [`format::BlockedMatrix`] runs any of them over
//! independently compressed row blocks.

pub mod bits;
pub mod cli;
pub mod csr;
pub mod error;
pub mod format;
pub mod grammar;
pub mod k2tree;
pub mod matio;
pub mod metrics;
pub mod pagerank;
pub mod refcopy;
pub mod synth;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use format::{Block, BlockedMatrix, BuildParams};
pub use matio::{DegreeVector, EdgeList, FormatTag, RowRange};
pub use pagerank::{pagerank, PageRankConfig, PageRankResult, PageRankState};
