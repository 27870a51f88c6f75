//! Gaussian cluster prototypes and exact merge algebra.
//!
//! A cluster is summarized by its sample count, mean and unbiased sample
//! covariance. Merging reconstructs the statistics of the union of the
//! underlying sample sets from these summaries alone.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// A multivariate Gaussian cluster: `n` samples with mean `mean` and covariance `cov`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ClusterRecord", into = "ClusterRecord")]
pub struct GaussianCluster {
    n: u64,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianCluster {
    /// Builds a cluster and checks every invariant (n >= 2, matching
    /// dimensions, symmetric positive-definite covariance).
    pub fn new(n: u64, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let c = Self::from_parts(n, mean, cov)?;
        c.validate()?;
        Ok(c)
    }

    /// Builds a cluster checking only shapes and `n`. The covariance may be
    /// singular; measures reject such clusters when they need a factorization.
    pub fn from_parts(n: u64, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewSamples { n });
        }
        if mean.is_empty() {
            return Err(Error::InvalidCluster("zero-dimensional mean".into()));
        }
        if cov.nrows() != cov.ncols() {
            return Err(Error::NotSquare {
                rows: cov.nrows(),
                cols: cov.ncols(),
            });
        }
        if cov.nrows() != mean.len() {
            return Err(Error::DimensionMismatch {
                left: mean.len(),
                right: cov.nrows(),
            });
        }
        Ok(Self { n, mean, cov })
    }

    /// Checks symmetry, positive definiteness and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.mean.iter().chain(self.cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCluster("non-finite entry".into()));
        }
        linalg::cholesky(&self.cov).map(|_| ())
    }

    /// Spherical cluster `N(mean, variance * I)`.
    pub fn spherical(n: u64, mean: &[f64], variance: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(
            n,
            DVector::from_column_slice(mean),
            DMatrix::from_diagonal_element(d, d, variance),
        )
    }

    /// Axis-aligned cluster with the given variances on the diagonal.
    pub fn diagonal(n: u64, mean: &[f64], variances: &[f64]) -> Result<Self> {
        Self::new(
            n,
            DVector::from_column_slice(mean),
            DMatrix::from_diagonal(&DVector::from_column_slice(variances)),
        )
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| cmp_slices(self.mean.as_slice(), other.mean.as_slice()))
            .then_with(|| cmp_slices(self.cov.as_slice(), other.cov.as_slice()))
    }
}

fn cmp_slices(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// JSON shape of a cluster: `{"n": .., "mean": [..], "cov": [[..], ..]}` with row-major covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub n: u64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl TryFrom<ClusterRecord> for GaussianCluster {
    type Error = Error;

    fn try_from(r: ClusterRecord) -> Result<Self> {
        let d = r.mean.len();
        if r.cov.len() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: r.cov.len(),
            });
        }
        if let Some(row) = r.cov.iter().find(|row| row.len() != d) {
            return Err(Error::DimensionMismatch {
                left: d,
                right: row.len(),
            });
        }
        let cov = DMatrix::from_fn(d, d, |i, j| r.cov[i][j]);
        GaussianCluster::new(r.n, DVector::from_vec(r.mean), cov)
    }
}

impl From<GaussianCluster> for ClusterRecord {
    fn from(c: GaussianCluster) -> Self {
        let d = c.dim();
        ClusterRecord {
            n: c.n,
            mean: c.mean.iter().copied().collect(),
            cov: (0..d)
                .map(|i| (0..d).map(|j| c.cov[(i, j)]).collect())
                .collect(),
        }
    }
}

fn check_same_dim<'a>(clusters: impl IntoIterator<Item = &'a GaussianCluster>) -> Result<usize> {
    let mut it = clusters.into_iter();
    let d = it.next().ok_or(Error::Empty("cluster list"))?.dim();
    for c in it {
        if c.dim() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: c.dim(),
            });
        }
    }
    Ok(d)
}

/// Merges two clusters.
///
/// `(n_p + n_q - 1) S = (n_p - 1) S_p + (n_q - 1) S_q + (n_p n_q / (n_p + n_q)) dd^T`
/// with `d = mu_p - mu_q`.
pub fn merge_pair(p: &GaussianCluster, q: &GaussianCluster) -> Result<GaussianCluster> {
    check_same_dim([p, q])?;
    let n = p.n + q.n;
    let (np, nq, nm) = (p.n as f64, q.n as f64, n as f64);
    let mean = (&p.mean * np + &q.mean * nq) / nm;
    let delta = &p.mean - &q.mean;
    let mut cov = &p.cov * (np - 1.0) + &q.cov * (nq - 1.0);
    cov.ger(np * nq / nm, &delta, &delta, 1.0);
    cov /= nm - 1.0;
    linalg::symmetrize(&mut cov);
    GaussianCluster::from_parts(n, mean, cov)
}

/// Diagonal of the merged covariance of two clusters, for callers that
/// never need the off-diagonal entries.
pub(crate) fn merged_diagonal(p: &GaussianCluster, q: &GaussianCluster) -> Result<Vec<f64>> {
    check_same_dim([p, q])?;
    let (np, nq) = (p.n as f64, q.n as f64);
    let nm = np + nq;
    let w = np * nq / nm;
    Ok((0..p.dim())
        .map(|i| {
            let delta = p.mean[i] - q.mean[i];
            ((np - 1.0) * p.cov[(i, i)] + (nq - 1.0) * q.cov[(i, i)] + w * delta * delta)
                / (nm - 1.0)
        })
        .collect())
}

fn canonical_order(clusters: &[GaussianCluster]) -> Vec<&GaussianCluster> {
    let mut sorted: Vec<&GaussianCluster> = clusters.iter().collect();
    sorted.sort_by(|a, b| a.canonical_cmp(b));
    sorted
}

fn merged_count_and_mean(clusters: &[&GaussianCluster]) -> (u64, DVector<f64>) {
    let n: u64 = clusters.iter().map(|c| c.n).sum();
    let d = clusters[0].dim();
    let mut weighted = DVector::zeros(d);
    for c in clusters {
        weighted.axpy(c.n as f64, &c.mean, 1.0);
    }
    (n, weighted / n as f64)
}

/// Merges any number of clusters in one step using the moment form
/// `(n_M - 1) S_M = sum (n_j - 1) S_j + sum n_j mu_j mu_j^T - n_M mu_M mu_M^T`.
///
/// Clusters are summed in a canonical order so the result does not depend on
/// the order of the input. Means enter the moment terms relative to the first
/// cluster's mean, which leaves the result unchanged algebraically and keeps
/// the subtraction well conditioned when means are far from the origin.
pub fn merge_many(clusters: &[GaussianCluster]) -> Result<GaussianCluster> {
    check_same_dim(clusters)?;
    if clusters.len() == 1 {
        return Ok(clusters[0].clone());
    }
    let sorted = canonical_order(clusters);
    let (n, mean) = merged_count_and_mean(&sorted);
    let origin = sorted[0].mean.clone();
    let d = mean.len();

    let mut scatter = DMatrix::zeros(d, d);
    for c in &sorted {
        scatter += &c.cov * (c.n as f64 - 1.0);
        let shifted = &c.mean - &origin;
        scatter.ger(c.n as f64, &shifted, &shifted, 1.0);
    }
    let shifted = &mean - &origin;
    scatter.ger(-(n as f64), &shifted, &shifted, 1.0);
    scatter /= n as f64 - 1.0;
    linalg::symmetrize(&mut scatter);
    GaussianCluster::from_parts(n, mean, scatter)
}

/// The two contributions to a multi-cluster merge, both unnormalized:
/// `variance = sum (n_j - 1) S_j` and
/// `distance = sum_{i<j} (n_i n_j / n_M) (mu_i - mu_j)(mu_i - mu_j)^T`.
/// Their sum is `(n_M - 1) S_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTerms {
    pub n: u64,
    pub mean: DVector<f64>,
    pub variance: DMatrix<f64>,
    pub distance: DMatrix<f64>,
}

impl MergeTerms {
    /// `variance + distance`, i.e. `(n_M - 1) S_M`.
    pub fn scatter(&self) -> DMatrix<f64> {
        &self.variance + &self.distance
    }

    /// A term rescaled by `1 / (n_M - 1)` as a plottable cluster at the merged mean.
    pub fn as_cluster(&self, term: &DMatrix<f64>) -> GaussianCluster {
        GaussianCluster {
            n: self.n,
            mean: self.mean.clone(),
            cov: term / (self.n as f64 - 1.0),
        }
    }
}

pub fn merge_terms(clusters: &[GaussianCluster]) -> Result<MergeTerms> {
    let d = check_same_dim(clusters)?;
    let sorted = canonical_order(clusters);
    let (n, mean) = merged_count_and_mean(&sorted);
    let nm = n as f64;

    let mut variance = DMatrix::zeros(d, d);
    for c in &sorted {
        variance += &c.cov * (c.n as f64 - 1.0);
    }
    let mut distance = DMatrix::zeros(d, d);
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            let delta = &a.mean - &b.mean;
            distance.ger(a.n as f64 * b.n as f64 / nm, &delta, &delta, 1.0);
        }
    }
    Ok(MergeTerms {
        n,
        mean,
        variance,
        distance,
    })
}

/// Multi-cluster merge through the pairwise (variance + center distance)
/// form. Quadratic in the number of clusters; [`merge_many`] is the
/// production path and this exists as an independent check on it.
pub fn merge_many_pairwise_form(clusters: &[GaussianCluster]) -> Result<GaussianCluster> {
    check_same_dim(clusters)?;
    if clusters.len() == 1 {
        return Ok(clusters[0].clone());
    }
    let terms = merge_terms(clusters)?;
    let mut cov = terms.scatter() / (terms.n as f64 - 1.0);
    linalg::symmetrize(&mut cov);
    GaussianCluster::from_parts(terms.n, terms.mean, cov)
}

/// Sample matrix with one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        if rows.nrows() < 2 {
            return Err(Error::TooFewSamples {
                n: rows.nrows() as u64,
            });
        }
        if rows.ncols() == 0 {
            return Err(Error::InvalidCluster("zero-dimensional samples".into()));
        }
        Ok(Self { rows })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                left: d,
                right: r.len(),
            });
        }
        Self::new(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }
}

/// Sample mean and unbiased sample covariance of a data matrix.
///
/// Uses a centered two-pass computation. The covariance is not checked for
/// positive definiteness.
pub fn moments_from_data(x: &DataMatrix) -> Result<GaussianCluster> {
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewSamples { n: n as u64 });
    }
    let rows = x.rows();
    let mean = rows.row_mean().transpose();
    let mut centered = rows.clone();
    for mut r in centered.row_iter_mut() {
        r -= mean.transpose();
    }
    let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
    linalg::symmetrize(&mut cov);
    GaussianCluster::from_parts(n as u64, mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).abs().max() <= tol * b.abs().max().max(1.0)
    }

    #[test]
    fn merge_identical_spherical() {
        let p = GaussianCluster::spherical(101, &[0.0, 0.0], 1.0).unwrap();
        let m = merge_pair(&p, &p).unwrap();
        assert_eq!(m.n(), 202);
        assert_eq!(m.mean().as_slice(), &[0.0, 0.0]);
        let expected = DMatrix::from_diagonal_element(2, 2, 200.0 / 201.0);
        assert!(close(m.cov(), &expected, 1e-15));
    }

    #[test]
    fn merge_separated_spherical() {
        let p = GaussianCluster::spherical(101, &[0.0, 0.0], 1.0).unwrap();
        let q = GaussianCluster::spherical(101, &[10.0, 0.0], 1.0).unwrap();
        let m = merge_pair(&p, &q).unwrap();
        assert_eq!(m.mean().as_slice(), &[5.0, 0.0]);
        assert!((m.cov()[(0, 0)] - (200.0 + 50.5 * 100.0) / 201.0).abs() < 1e-12);
        assert!((m.cov()[(0, 0)] - 26.119_402_985_074_6).abs() < 1e-12);
        assert!((m.cov()[(1, 1)] - 200.0 / 201.0).abs() < 1e-15);
        assert_eq!(m.cov()[(0, 1)], 0.0);
    }

    #[test]
    fn merge_dimension_mismatch() {
        let p = GaussianCluster::spherical(10, &[0.0, 0.0], 1.0).unwrap();
        let q = GaussianCluster::spherical(10, &[0.0, 0.0, 0.0], 1.0).unwrap();
        let err = merge_pair(&p, &q).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { left: 2, right: 3 }));
        assert!(err.to_string().contains('2') && err.to_string().contains('3'));
        assert!(merge_many(&[p.clone(), q.clone()]).is_err());
        assert!(merge_many_pairwise_form(&[p, q]).is_err());
    }

    #[test]
    fn merge_many_three_copies() {
        let p = GaussianCluster::spherical(101, &[0.0, 0.0], 1.0).unwrap();
        let m = merge_many(&[p.clone(), p.clone(), p]).unwrap();
        assert_eq!(m.n(), 303);
        let expected = DMatrix::from_diagonal_element(2, 2, 300.0 / 302.0);
        assert!(close(m.cov(), &expected, 1e-15));
    }

    #[test]
    fn merge_many_singleton_and_empty() {
        let p = GaussianCluster::diagonal(7, &[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(merge_many(std::slice::from_ref(&p)).unwrap(), p);
        assert_eq!(merge_many_pairwise_form(std::slice::from_ref(&p)).unwrap(), p);
        assert!(matches!(merge_many(&[]), Err(Error::Empty(_))));
        assert!(matches!(merge_many_pairwise_form(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn weight_dominance() {
        let big = GaussianCluster::spherical(1_000_000, &[0.0, 0.0, 0.0], 1.0).unwrap();
        let small = GaussianCluster::spherical(10, &[0.0, 0.0, 0.0], 100.0).unwrap();
        let m = merge_many(&[big, small]).unwrap();
        for i in 0..3 {
            assert!((m.cov()[(i, i)] - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn moments_of_square_corners() {
        let x = DataMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 2.0],
            vec![2.0, 2.0],
        ])
        .unwrap();
        let c = moments_from_data(&x).unwrap();
        assert_eq!(c.n(), 4);
        assert_eq!(c.mean().as_slice(), &[1.0, 1.0]);
        let expected = DMatrix::from_diagonal_element(2, 2, 4.0 / 3.0);
        assert!(close(c.cov(), &expected, 1e-15));
    }

    #[test]
    fn moments_degenerate_rows_still_returns() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let c = moments_from_data(&x).unwrap();
        assert_eq!(c.cov(), &DMatrix::zeros(2, 2));
        assert!(c.validate().is_err());
    }

    #[test]
    fn moments_need_two_rows() {
        assert!(matches!(
            DataMatrix::from_rows(&[vec![1.0]]),
            Err(Error::TooFewSamples { n: 1 })
        ));
    }

    #[test]
    fn terms_reconstruct_scatter() {
        let a = GaussianCluster::diagonal(20, &[0.0, 1.0], &[1.0, 2.0]).unwrap();
        let b = GaussianCluster::diagonal(30, &[3.0, -1.0], &[0.5, 0.5]).unwrap();
        let c = GaussianCluster::spherical(50, &[1.0, 4.0], 2.0).unwrap();
        let clusters = [a, b, c];
        let terms = merge_terms(&clusters).unwrap();
        let m = merge_many(&clusters).unwrap();
        let expected = m.cov() * (m.n() as f64 - 1.0);
        assert!(close(&terms.scatter(), &expected, 1e-12));
    }

    #[test]
    fn cluster_rejects_bad_input() {
        assert!(matches!(
            GaussianCluster::spherical(1, &[0.0], 1.0),
            Err(Error::TooFewSamples { n: 1 })
        ));
        assert!(GaussianCluster::spherical(5, &[0.0], -1.0).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(
            GaussianCluster::new(5, DVector::zeros(2), asym),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(GaussianCluster::new(5, DVector::zeros(3), DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let c = GaussianCluster::new(
            12,
            DVector::from_vec(vec![1.0, -2.0]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
        )
        .unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"n":12,"mean":[1.0,-2.0],"cov":[[2.0,0.5],[0.5,1.0]]}"#);
        let back: GaussianCluster = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"n":12,"mean":[0.0,0.0],"cov":[[1.0,2.0],[2.0,1.0]]}"#;
        assert!(serde_json::from_str::<GaussianCluster>(bad).is_err());
    }
}
