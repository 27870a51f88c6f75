//! Selecting groups of mutually overlapping clusters and merging each group
//! in one step.

use serde::{Deserialize, Serialize};

use crate::cluster::{merge_many, GaussianCluster};
use crate::error::{Error, Result};
use crate::measures::{adjacency_from_threshold, pairwise_matrix, AdjacencyMatrix, MeasureKind};

#[derive(Clone, PartialEq, Eq)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(size: usize) -> Self {
        Self {
            words: vec![0; size.div_ceil(64)],
        }
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn and(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    fn and_not(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(),
        }
    }

    fn count_and(&self, other: &BitSet) -> u32 {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum()
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + bit)
            })
        })
    }
}

struct Enumerator<'a> {
    neighbors: &'a [BitSet],
    out: Vec<Vec<usize>>,
}

impl Enumerator<'_> {
    // Bron-Kerbosch with Tomita pivoting.
    fn expand(&mut self, r: &mut Vec<usize>, mut p: BitSet, mut x: BitSet) {
        if p.is_empty() {
            if x.is_empty() {
                let mut clique = r.clone();
                clique.sort_unstable();
                self.out.push(clique);
            }
            return;
        }
        let pivot = p
            .iter()
            .chain(x.iter())
            .max_by_key(|&u| p.count_and(&self.neighbors[u]))
            .expect("p is non-empty");
        let candidates: Vec<usize> = p.and_not(&self.neighbors[pivot]).iter().collect();
        for v in candidates {
            r.push(v);
            self.expand(r, p.and(&self.neighbors[v]), x.and(&self.neighbors[v]));
            r.pop();
            p.remove(v);
            x.insert(v);
        }
    }
}

fn sort_cliques(cliques: &mut [Vec<usize>]) {
    cliques.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
}

fn cliques_within(a: &AdjacencyMatrix, vertices: &[usize]) -> Vec<Vec<usize>> {
    if vertices.is_empty() {
        return Vec::new();
    }
    let size = a.size();
    let mut allowed = BitSet::new(size);
    for &v in vertices {
        allowed.insert(v);
    }
    let neighbors: Vec<BitSet> = (0..size)
        .map(|i| {
            let mut b = BitSet::new(size);
            for j in a.neighbors(i) {
                b.insert(j);
            }
            b.and(&allowed)
        })
        .collect();
    let mut e = Enumerator {
        neighbors: &neighbors,
        out: Vec::new(),
    };
    e.expand(&mut Vec::new(), allowed, BitSet::new(size));
    let mut cliques = e.out;
    sort_cliques(&mut cliques);
    cliques
}

/// Every maximal clique of the graph (isolated vertices are cliques of size
/// one). Each clique is sorted ascending; the list is ordered by size
/// descending, then lexicographically.
pub fn maximal_cliques(a: &AdjacencyMatrix) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..a.size()).collect();
    cliques_within(a, &all)
}

/// Disjoint cover of cluster indices by cliques.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    pub groups: Vec<Vec<usize>>,
}

impl GroupPartition {
    /// Every index on its own.
    pub fn singletons(size: usize) -> Self {
        Self {
            groups: (0..size).map(|i| vec![i]).collect(),
        }
    }

    /// Checks that the groups are non-empty, disjoint and cover `0..size`.
    pub fn validate(&self, size: usize) -> Result<()> {
        let mut seen = vec![false; size];
        for (g, group) in self.groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::InvalidPartition(format!("group {g} is empty")));
            }
            for &i in group {
                if i >= size {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} out of range for {size} clusters"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidPartition(format!("index {i} appears twice")));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("index {i} is not covered")));
        }
        Ok(())
    }

    pub fn merged_group_count(&self) -> usize {
        self.groups.iter().filter(|g| g.len() > 1).count()
    }
}

/// Greedy peeling: take the first maximal clique of the residual graph,
/// remove its vertices, repeat. Once no edge is left, the remaining vertices
/// follow as singletons in ascending order.
pub fn partition_into_groups(a: &AdjacencyMatrix) -> GroupPartition {
    let mut remaining: Vec<usize> = (0..a.size()).collect();
    let mut groups = Vec::new();
    while !remaining.is_empty() {
        let first = cliques_within(a, &remaining).swap_remove(0);
        if first.len() < 2 {
            groups.extend(remaining.iter().map(|&i| vec![i]));
            break;
        }
        remaining.retain(|i| first.binary_search(i).is_err());
        groups.push(first);
    }
    GroupPartition { groups }
}

/// Merges each group into one cluster, in partition order.
pub fn merge_groups(
    clusters: &[GaussianCluster],
    partition: &GroupPartition,
) -> Result<Vec<GaussianCluster>> {
    partition.validate(clusters.len())?;
    partition
        .groups
        .iter()
        .enumerate()
        .map(|(g, group)| {
            let members: Vec<GaussianCluster> = group.iter().map(|&i| clusters[i].clone()).collect();
            merge_many(&members).map_err(|e| Error::Group {
                group: g,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Result of one detect-group-merge pass.
#[derive(Debug, Clone)]
pub struct MergePass {
    pub adjacency: AdjacencyMatrix,
    pub partition: GroupPartition,
    pub merged: Vec<GaussianCluster>,
}

/// Pairwise `kind` matrix, threshold adjacency, greedy clique partition and
/// one-step merge of every group.
pub fn merge_overlapping(
    clusters: &[GaussianCluster],
    kind: MeasureKind,
    threshold: f64,
) -> Result<MergePass> {
    let adjacency = if clusters.len() < 2 {
        AdjacencyMatrix::empty(clusters.len())
    } else {
        adjacency_from_threshold(&pairwise_matrix(clusters, kind)?, threshold)
    };
    let partition = partition_into_groups(&adjacency);
    let merged = merge_groups(clusters, &partition)?;
    Ok(MergePass {
        adjacency,
        partition,
        merged,
    })
}
