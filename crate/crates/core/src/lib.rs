//! Sublinear testing of k-clusterability for bounded-degree graphs.
//!
//! The tester ([`cluster_test::k_cluster_test`]) touches the input only
//! through neighbor queries: it runs short lazy random walks from a few
//! sampled vertices, compares their endpoint distributions with collision
//! statistics ([`dist_test`]), and counts components of the resulting
//! similarity graph. The remaining modules are exact, desk-scale oracles used
//! to check the tester and the facts it depends on: dense walk distributions
//! ([`walk`]), exhaustive conductance ([`graph`]), spectra ([`spectral`]),
//! and the cut and repair constructions behind the soundness argument
//! ([`farness`]). [`generators`] builds seeded instances with known structure.

pub mod cli_io;
pub mod dist_test;
pub mod error;
pub mod farness;
pub mod generators;
pub mod graph;
pub mod rng;
pub mod spectral;
pub mod union_find;
pub mod walk;

pub use error::{Error, Result};
pub use graph::{BoundedDegreeGraph, NeighborOracle, Vertex, VertexSet};
