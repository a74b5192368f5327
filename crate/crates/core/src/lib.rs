//! Community detection and market-structure analysis on sparse weighted graphs.
//!
//! The crate has three layers:
//!
//! - [`graph`]: edge-list ingestion, regional aggregation, and the immutable
//!   [`graph::Graph`] all algorithms consume.
//! - Two detection engines: [`modularity`] (weighted Louvain with a resolution
//!   parameter) and [`bpem`] (EM/belief-propagation fitting of the
//!   degree-corrected block model defined in [`dcsbm`]).
//! - [`analysis`]: demographic statistics over a fitted submarket structure
//!   (age quantiles, sex ratios, mixing and reply matrices, age-gap tables).
//!
//! [`acceptance`] bundles the synthetic verification suite so it can run both
//! under `cargo test` and from the command line.

pub mod acceptance;
pub mod analysis;
pub mod bpem;
pub mod dcsbm;
pub mod error;
pub mod graph;
pub mod modularity;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
