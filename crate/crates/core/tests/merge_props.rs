mod common;

use common::*;
use nalgebra::DMatrix;
use overlap_core::{
    merge_many, merge_many_pairwise_form, merge_pair, merge_terms, moments_from_data, DataMatrix,
    GaussianCluster,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn parts_of(x: &DMatrix<f64>, ranges: &[std::ops::Range<usize>]) -> Vec<GaussianCluster> {
    ranges
        .iter()
        .map(|r| moments_from_data(&DataMatrix::new(x.rows(r.start, r.len()).into_owned()).unwrap()).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merged_parts_match_whole(seed in any::<u64>(), d in 1usize..8, k in 2usize..6, extra in 0usize..300) {
        let mut rng = rng(seed);
        let n = 2 * k + extra;
        let x = random_data(&mut rng, n, d);
        let whole = moments_from_data(&DataMatrix::new(x.clone()).unwrap()).unwrap();
        let parts = parts_of(&x, &random_split(&mut rng, n, k));
        let merged = merge_many(&parts).unwrap();
        prop_assert_eq!(merged.n(), n as u64);
        prop_assert!(cluster_rel_err(&merged, &whole) <= 1e-9);
    }

    #[test]
    fn pair_merge_matches_data(seed in any::<u64>(), d in 1usize..6, n in 4usize..200) {
        let mut rng = rng(seed);
        let x = random_data(&mut rng, n, d);
        let whole = moments_from_data(&DataMatrix::new(x.clone()).unwrap()).unwrap();
        let parts = parts_of(&x, &random_split(&mut rng, n, 2));
        let merged = merge_pair(&parts[0], &parts[1]).unwrap();
        prop_assert!(cluster_rel_err(&merged, &whole) <= 1e-9);
    }

    #[test]
    fn merge_many_is_order_invariant(seed in any::<u64>(), d in 1usize..10, k in 2usize..8) {
        let mut rng = rng(seed);
        let mut clusters: Vec<GaussianCluster> = (0..k).map(|_| random_cluster(&mut rng, d)).collect();
        let a = merge_many(&clusters).unwrap();
        clusters.shuffle(&mut rng);
        let b = merge_many(&clusters).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn merge_is_associative(seed in any::<u64>(), d in 1usize..10) {
        let mut rng = rng(seed);
        let c: Vec<GaussianCluster> = (0..3).map(|_| random_cluster(&mut rng, d)).collect();
        let left = merge_pair(&merge_pair(&c[0], &c[1]).unwrap(), &c[2]).unwrap();
        let right = merge_pair(&c[0], &merge_pair(&c[1], &c[2]).unwrap()).unwrap();
        let all = merge_many(&c).unwrap();
        prop_assert!(cluster_rel_err(&left, &right) <= 1e-10);
        prop_assert!(cluster_rel_err(&left, &all) <= 1e-10);
    }

    #[test]
    fn pair_and_many_agree(seed in any::<u64>(), d in 1usize..20) {
        let mut rng = rng(seed);
        let p = random_cluster(&mut rng, d);
        let q = random_cluster(&mut rng, d);
        let a = merge_pair(&p, &q).unwrap();
        let b = merge_many(&[p, q]).unwrap();
        prop_assert_eq!(a.n(), b.n());
        prop_assert!((a.mean() - b.mean()).amax() <= 1e-12 * b.mean().amax().max(1.0));
        prop_assert!(scaled_err(a.cov(), b.cov()) <= 1e-12);
    }

    #[test]
    fn moment_and_pairwise_forms_agree(seed in any::<u64>(), d in 1usize..20, k in 2usize..10) {
        let mut rng = rng(seed);
        let clusters: Vec<GaussianCluster> = (0..k).map(|_| random_cluster(&mut rng, d)).collect();
        let a = merge_many(&clusters).unwrap();
        let b = merge_many_pairwise_form(&clusters).unwrap();
        prop_assert!(cluster_rel_err(&a, &b) <= 1e-10);
    }

    #[test]
    fn terms_sum_to_scatter(seed in any::<u64>(), d in 1usize..10, k in 2usize..6) {
        let mut rng = rng(seed);
        let clusters: Vec<GaussianCluster> = (0..k).map(|_| random_cluster(&mut rng, d)).collect();
        let terms = merge_terms(&clusters).unwrap();
        let merged = merge_many(&clusters).unwrap();
        let scatter = merged.cov() * (merged.n() as f64 - 1.0);
        prop_assert!(max_rel_err(&terms.scatter(), &scatter) <= 1e-10);
        prop_assert!(terms.distance.symmetric_eigenvalues().min() >= -1e-9 * terms.distance.abs().max().max(1.0));
    }

    #[test]
    fn merge_preserves_dimension_and_symmetry(seed in any::<u64>(), d in 1usize..12, k in 1usize..6) {
        let mut rng = rng(seed);
        let clusters: Vec<GaussianCluster> = (0..k).map(|_| random_cluster(&mut rng, d)).collect();
        let m = merge_many(&clusters).unwrap();
        prop_assert_eq!(m.dim(), d);
        prop_assert_eq!(m.n(), clusters.iter().map(GaussianCluster::n).sum::<u64>());
        prop_assert_eq!(m.cov(), &m.cov().transpose());
        prop_assert!(m.validate().is_ok());
    }
}

#[test]
fn far_from_origin_means_stay_accurate() {
    let mut rng = rng(99);
    let x = random_data(&mut rng, 400, 3).add_scalar(1e6);
    let whole = moments_from_data(&DataMatrix::new(x.clone()).unwrap()).unwrap();
    let parts = parts_of(&x, &random_split(&mut rng, 400, 4));
    let merged = merge_many(&parts).unwrap();
    assert!(max_rel_err(merged.cov(), whole.cov()) <= 1e-6);
}
