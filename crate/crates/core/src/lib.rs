//! Sandpile groups of random directed bipartite graphs.
//!
//! The crate computes corank statistics of graph Laplacians over `Z/pZ`,
//! their integer Smith normal forms, the exact limiting corank
//! distributions, and the structural quantities (concentration of
//! Laplacian row laws, zero-sum probabilities, subspace hit probabilities)
//! that govern rank evolution under row exposure. The [`montecarlo`]
//! module runs reproducible parallel experiments comparing samples with
//! theory.

pub mod distributions;
pub mod error;
pub mod gfp;
pub mod graph;
pub mod montecarlo;
pub mod snf;
pub mod stats;
pub mod structure;
pub mod textfmt;

pub use error::{Error, Result};
pub use gfp::{BitMatrix, GfMatrix, GfVector, RankTracker, RowExposure};
pub use graph::{BipartiteDigraph, Digraph, ModelParams};
pub use snf::{IntMatrix, InvariantFactors, SandpileGroup};
