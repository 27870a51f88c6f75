//! Fixtures shared by the criterion benchmarks.

use overlap_core::scenarios::generate;
use overlap_core::{GaussianCluster, ScenarioKind, ScenarioSpec};

/// The two clusters of a canonical case at dimension `dim`.
pub fn pair(kind: ScenarioKind, dim: usize, seed: u64) -> (GaussianCluster, GaussianCluster) {
    let mut c = generate(&ScenarioSpec::new(kind, dim, seed)).expect("valid scenario");
    let q = c.pop().unwrap();
    let p = c.pop().unwrap();
    (p, q)
}

/// A random field of `count` two-dimensional clusters.
pub fn field(count: usize, seed: u64) -> Vec<GaussianCluster> {
    generate(&ScenarioSpec::new(ScenarioKind::RandomField, 2, seed).with_count(count))
        .expect("valid scenario")
}
