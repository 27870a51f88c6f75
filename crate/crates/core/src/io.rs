//! JSON file formats shared by the command-line tools.

use serde::{Deserialize, Serialize};

use crate::cluster::GaussianCluster;
use crate::error::{Error, Result};
use crate::measures::AdjacencyMatrix;

/// `{"clusters": [ClusterObject, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub clusters: Vec<GaussianCluster>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrSet {
    One(GaussianCluster),
    Set(ClusterSet),
}

pub fn parse_cluster_set(text: &str) -> Result<ClusterSet> {
    let set: ClusterSet = serde_json::from_str(text)?;
    if let Some(c) = set.clusters.first() {
        let d = c.dim();
        if let Some(bad) = set.clusters.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch {
                left: d,
                right: bad.dim(),
            });
        }
    }
    Ok(set)
}

/// Accepts a bare cluster object or a cluster set holding exactly one cluster.
pub fn parse_single_cluster(text: &str) -> Result<GaussianCluster> {
    match serde_json::from_str::<OneOrSet>(text) {
        Ok(OneOrSet::One(c)) => Ok(c),
        Ok(OneOrSet::Set(mut s)) if s.clusters.len() == 1 => Ok(s.clusters.remove(0)),
        Ok(OneOrSet::Set(s)) => Err(Error::InvalidCluster(format!(
            "expected a single cluster, found a set of {}",
            s.clusters.len()
        ))),
        // re-parse strictly for a useful message
        Err(_) => Ok(serde_json::from_str::<GaussianCluster>(text)?),
    }
}

/// `{"adjacency": [[bool, ...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyRecord {
    pub adjacency: Vec<Vec<bool>>,
}

impl From<&AdjacencyMatrix> for AdjacencyRecord {
    fn from(a: &AdjacencyMatrix) -> Self {
        Self { adjacency: a.rows() }
    }
}

impl TryFrom<AdjacencyRecord> for AdjacencyMatrix {
    type Error = Error;

    fn try_from(r: AdjacencyRecord) -> Result<Self> {
        AdjacencyMatrix::from_rows(&r.adjacency)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{"n": 10, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}"#;

    #[test]
    fn single_cluster_forms() {
        let c = parse_single_cluster(ONE).unwrap();
        assert_eq!(c.n(), 10);
        let set = format!(r#"{{"clusters": [{ONE}]}}"#);
        assert_eq!(parse_single_cluster(&set).unwrap(), c);
        let two = format!(r#"{{"clusters": [{ONE}, {ONE}]}}"#);
        assert!(parse_single_cluster(&two).is_err());
        let err = parse_single_cluster(r#"{"n": 1, "mean": [0], "cov": [[1]]}"#).unwrap_err();
        assert!(err.to_string().contains("too few samples"), "{err}");
    }

    #[test]
    fn set_rejects_mixed_dimensions() {
        let three = r#"{"n": 10, "mean": [0, 0, 0], "cov": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}"#;
        let set = format!(r#"{{"clusters": [{ONE}, {three}]}}"#);
        assert!(matches!(parse_cluster_set(&set), Err(Error::DimensionMismatch { .. })));
        assert!(parse_cluster_set(r#"{"clusters": []}"#).unwrap().clusters.is_empty());
    }

    #[test]
    fn adjacency_record_round_trip() {
        let a = AdjacencyMatrix::from_edges(3, &[(0, 2)]);
        let r = AdjacencyRecord::from(&a);
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"adjacency":[[false,false,true],[false,false,false],[true,false,false]]}"#
        );
        assert_eq!(AdjacencyMatrix::try_from(r).unwrap(), a);
    }
}
