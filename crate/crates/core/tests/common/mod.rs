#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use overlap_core::GaussianCluster;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `G G^T + eps I` with Gaussian `G`: a well-conditioned-enough random PD matrix.
pub fn random_pd(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| normal(rng));
    let mut a = &g * g.transpose() / d as f64 + DMatrix::identity(d, d) * 0.1;
    for j in 0..d {
        for i in (j + 1)..d {
            a[(j, i)] = a[(i, j)];
        }
    }
    a
}

pub fn random_diagonal_pd(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_fn(d, |_, _| (2.0 * normal(rng)).exp()))
}

pub fn random_cluster(rng: &mut impl Rng, d: usize) -> GaussianCluster {
    let n = rng.random_range(2..2000);
    let mean = DVector::from_fn(d, |_, _| 3.0 * normal(rng));
    let scale = (normal(rng)).exp();
    GaussianCluster::new(n, mean, random_pd(rng, d) * scale).unwrap()
}

/// Elementwise relative error: max over entries of `|a - b| / max(|a|, |b|)`,
/// where entries below one ulp of the matrix scale count as exact.
pub fn max_rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let floor = f64::EPSILON * b.abs().max();
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let diff = (x - y).abs();
            if diff <= floor {
                0.0
            } else {
                diff / x.abs().max(y.abs())
            }
        })
        .fold(0.0, f64::max)
}

pub fn max_rel_err_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let am = DMatrix::from_column_slice(a.len(), 1, a.as_slice());
    let bm = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    max_rel_err(&am, &bm)
}

pub fn cluster_rel_err(a: &GaussianCluster, b: &GaussianCluster) -> f64 {
    assert_eq!(a.n(), b.n());
    max_rel_err_vec(a.mean(), b.mean()).max(max_rel_err(a.cov(), b.cov()))
}

/// Random data matrix with `n` rows around a random center, correlated columns.
pub fn random_data(rng: &mut impl Rng, n: usize, d: usize) -> DMatrix<f64> {
    let center = DVector::from_fn(d, |_, _| 5.0 * normal(rng));
    let mix = DMatrix::from_fn(d, d, |_, _| normal(rng));
    let mut x = DMatrix::from_fn(n, d, |_, _| normal(rng)) * mix.transpose();
    for mut row in x.row_iter_mut() {
        row += center.transpose();
    }
    x
}

/// Splits `0..n` into `k` contiguous parts of at least two rows each.
pub fn random_split(rng: &mut impl Rng, n: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    assert!(n >= 2 * k);
    let mut cuts: Vec<usize> = Vec::new();
    while cuts.len() < k - 1 {
        let c = rng.random_range(2..=n - 2);
        let mut all = cuts.clone();
        all.push(c);
        all.sort_unstable();
        let mut bounds = vec![0];
        bounds.extend(&all);
        bounds.push(n);
        if bounds.windows(2).all(|w| w[1] - w[0] >= 2) {
            cuts = all;
        }
    }
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(n);
    bounds.windows(2).map(|w| w[0]..w[1]).collect()
}

/// Brute-force maximal cliques by subset enumeration (small graphs only).
pub fn brute_force_cliques(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let c = adj.len();
    assert!(c <= 20);
    let is_clique = |mask: u32| {
        (0..c).all(|i| {
            mask & (1 << i) == 0 || (0..c).all(|j| j == i || mask & (1 << j) == 0 || adj[i][j])
        })
    };
    let mut out: Vec<Vec<usize>> = Vec::new();
    for mask in 1u32..(1 << c) {
        if !is_clique(mask) {
            continue;
        }
        let maximal = (0..c).all(|v| mask & (1 << v) != 0 || !is_clique(mask | (1 << v)));
        if maximal {
            out.push((0..c).filter(|&i| mask & (1 << i) != 0).collect());
        }
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    out
}

#[allow(clippy::needless_range_loop)]
pub fn random_graph(rng: &mut impl Rng, c: usize, p: f64) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; c]; c];
    for i in 0..c {
        for j in (i + 1)..c {
            if rng.random_bool(p) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    adj
}

/// Checks disjoint cover, clique property and maximality of each group in the
/// residual graph it was peeled from. Returns a description of the first violation.
pub fn verify_partition(adj: &[Vec<bool>], groups: &[Vec<usize>]) -> Result<(), String> {
    let c = adj.len();
    let mut seen = vec![false; c];
    for g in groups {
        for &i in g {
            if i >= c || seen[i] {
                return Err(format!("index {i} repeated or out of range"));
            }
            seen[i] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err("not a cover".into());
    }
    let mut residual: Vec<bool> = vec![true; c];
    for g in groups {
        for (a, &i) in g.iter().enumerate() {
            for &j in &g[a + 1..] {
                if !adj[i][j] {
                    return Err(format!("group {g:?} is not a clique ({i}, {j})"));
                }
            }
        }
        for v in 0..c {
            if residual[v] && !g.contains(&v) && g.iter().all(|&i| adj[i][v]) {
                return Err(format!("group {g:?} extendable by {v} in residual graph"));
            }
        }
        for &i in g {
            residual[i] = false;
        }
    }
    Ok(())
}

/// Largest entry difference over `max(1, max |b|)`.
pub fn scaled_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max() / b.abs().max().max(1.0)
}
