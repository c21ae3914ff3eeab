//! Spectral co-clustering of nonnegative contingency tables.
//!
//! The pipeline normalizes a table, decomposes its correspondence matrix,
//! builds optimal row and column representatives, clusters them with weighted
//! k-means, and measures how regular the resulting row-column cluster pairs are.
//! Exact brute-force oracles for cuts, discrepancy and cut norms are included for
//! small tables.

pub mod clustering;
pub mod cuts;
pub mod error;
pub mod io;
pub mod measure;
pub mod metrics;
pub mod models;
pub mod regularity;
pub mod report;
pub mod spectral;
pub mod table;

pub use clustering::{ClusterAssignment, KMeansConfig};
pub use error::{Error, ErrorKind, Result};
pub use table::{Axis, ContingencyTable, IndexSubset};
