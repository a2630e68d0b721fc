//! Discrete twisted Dirichlet Laplacians on scaled polygonal lattice
//! domains: exact geometry, ±1 flat connections, log-determinants via
//! sparse factorization, Monte Carlo heat-kernel checks, continuum
//! reference values, and asymptotic coefficient extraction.

pub mod connection;
pub mod continuum;
pub mod fit;
pub mod geometry;
pub mod quad;
pub mod special;
pub mod spectral;
pub mod store;
pub mod validate;
pub mod walker;

pub use connection::{FlatConnection, PunctureSet};
pub use geometry::{build_graph, DomainGraph, GeometrySummary, LatticeRegion, RegionSpec};
pub use spectral::SymmetricOperator;

/// Tool version stamped into stored records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
