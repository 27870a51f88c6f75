//! Overlap measures for multivariate Gaussian clusters.
//!
//! Clusters are `(n, mean, covariance)` summaries. The crate provides
//!
//! - exact merge algebra for two or many clusters ([`merge_pair`], [`merge_many`]),
//! - seven overlap/dissimilarity measures behind one [`MeasureKind`] switch,
//!   including the log-domain volume-ratio measure [`overlap`] and its
//!   factorization-free Hadamard bound [`overlap_hadamard`],
//! - adjacency thresholding and greedy maximal-clique grouping so that whole
//!   groups of mutually overlapping clusters merge in one step,
//! - seeded scenario generators and a timing/detection benchmark.

pub mod bench;
pub mod cluster;
pub mod error;
pub mod grouping;
pub mod io;
pub mod linalg;
pub mod measures;
pub mod scenarios;

pub use cluster::{
    merge_many, merge_many_pairwise_form, merge_pair, merge_terms, moments_from_data, ClusterRecord,
    DataMatrix, GaussianCluster, MergeTerms,
};
pub use error::{Error, Result};
pub use grouping::{maximal_cliques, merge_groups, partition_into_groups, GroupPartition};
pub use measures::{
    adjacency_from_threshold, arithmetic_bhattacharyya, bhattacharyya, egauss_ratio, jensen_shannon,
    kl_divergence, measure, overlap, overlap_hadamard, pairwise_matrix, wasserstein2, AdjacencyMatrix,
    MeasureKind, MeasureResult, Thresholds,
};
pub use scenarios::{ScenarioConfig, ScenarioKind, ScenarioSpec};

pub use nalgebra::{DMatrix, DVector};
