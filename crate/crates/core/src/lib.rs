//! Interval-based opinion homophily on directed interaction graphs.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: the immutable [`OpinionGraph`] and perspective-dependent neighborhoods.
//! * [`metrics`]: per-ego interval quantities ([`NeighborProfile`]) and the
//!   population rates R1/R2/R3.
//! * [`null_models`]: degree-preserving randomized and range-based null neighborhoods.
//! * [`stats`]: Welch t-test, Cohen's d and distance-decay diagnostics.
//! * [`intervals`]: opinion partitions, interaction matrices and per-interval tables.
//! * [`topology`]: degrees, directed clustering, Katz/eigenvector centrality,
//!   reciprocity and weak components.
//! * [`bc_sim`]: bounded-confidence dynamics used to build synthetic fixtures.
//! * [`pipeline`]: ingestion, configuration, full analysis runs and report emission.

pub mod bc_sim;
pub mod graph;
pub mod intervals;
pub mod metrics;
pub mod null_models;
pub mod numeric;
pub mod pipeline;
pub mod stats;
pub mod synthetic;
pub mod topology;

pub use graph::{BuildStats, GraphError, NodeIx, OpinionGraph, Perspective};
pub use metrics::{MetricsError, NeighborProfile, RateReport};
pub use null_models::{NullModel, NullModelError, NullTrial};
