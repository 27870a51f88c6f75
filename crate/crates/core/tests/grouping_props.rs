mod common;

use common::*;
use overlap_core::grouping::merge_overlapping;
use overlap_core::scenarios::generate;
use overlap_core::{
    maximal_cliques, merge_groups, overlap, partition_into_groups, AdjacencyMatrix,
    GaussianCluster, GroupPartition, MeasureKind, ScenarioKind, ScenarioSpec,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cliques_match_brute_force(seed in any::<u64>(), c in 1usize..=15, p in 0.0f64..1.0) {
        let adj = random_graph(&mut rng(seed), c, p);
        let got = maximal_cliques(&AdjacencyMatrix::from_rows(&adj).unwrap());
        prop_assert_eq!(got, brute_force_cliques(&adj));
    }

    #[test]
    fn partitions_are_valid(seed in any::<u64>(), c in 1usize..=80, p in 0.0f64..1.0) {
        let adj = random_graph(&mut rng(seed), c, p);
        let partition = partition_into_groups(&AdjacencyMatrix::from_rows(&adj).unwrap());
        prop_assert!(partition.validate(c).is_ok());
        if let Err(e) = verify_partition(&adj, &partition.groups) {
            prop_assert!(false, "{}", e);
        }
        let sizes: Vec<usize> = partition.groups.iter().map(Vec::len).collect();
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn grouped_merge_conserves_samples(seed in 0u64..500, count in 2usize..30) {
        let spec = ScenarioSpec::new(ScenarioKind::RandomField, 2, seed).with_count(count);
        let clusters = generate(&spec).unwrap();
        let pass = merge_overlapping(&clusters, MeasureKind::Overlap, 0.0).unwrap();
        let total = |c: &[GaussianCluster]| c.iter().map(GaussianCluster::n).sum::<u64>();
        prop_assert_eq!(total(&pass.merged), total(&clusters));
        prop_assert_eq!(pass.merged.len(), pass.partition.groups.len());
        for g in &pass.partition.groups {
            for (a, &i) in g.iter().enumerate() {
                for &j in &g[a + 1..] {
                    prop_assert!(overlap(&clusters[i], &clusters[j]).unwrap() < 0.0);
                }
            }
        }
    }
}

#[test]
fn singleton_partition_is_identity() {
    let clusters = generate(&ScenarioSpec::new(ScenarioKind::RandomField, 3, 5)).unwrap();
    let merged = merge_groups(&clusters, &GroupPartition::singletons(clusters.len())).unwrap();
    assert_eq!(merged, clusters);
}

#[test]
fn random_fields_do_merge() {
    let merging = (0..50)
        .filter(|&seed| {
            let spec = ScenarioSpec::new(ScenarioKind::RandomField, 2, seed).with_count(20);
            let c = generate(&spec).unwrap();
            merge_overlapping(&c, MeasureKind::Overlap, 0.0)
                .unwrap()
                .partition
                .merged_group_count()
                > 0
        })
        .count();
    assert!(merging >= 10, "only {merging} of 50 fields merged anything");
}

#[test]
fn cliques_beyond_one_word() {
    let c = 130;
    let edges: Vec<(usize, usize)> = (0..c - 1).map(|i| (i, i + 1)).collect();
    let a = AdjacencyMatrix::from_edges(c, &edges);
    assert_eq!(maximal_cliques(&a).len(), c - 1);
    let partition = partition_into_groups(&a);
    assert!(verify_partition(&a.rows(), &partition.groups).is_ok());
}
