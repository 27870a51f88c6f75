//! Seeded generators for canonical two-cluster overlap cases and random
//! cluster fields, plus ellipse polylines for plotting.
//!
//! All randomness comes from ChaCha8 seeded with the spec's 64-bit seed, so a
//! given spec produces bit-identical clusters on every platform.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cluster::{merge_many, merge_terms, GaussianCluster};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Two clusters of different size whose centers are close.
    Overlap,
    /// Two equally shaped clusters far apart.
    Separate,
    /// A small cluster inside the one-sigma ellipsoid of a much larger one.
    Nested,
    /// Two elongated clusters with a shared center and perpendicular dominant axes.
    Orthogonal,
    /// `count` clusters scattered uniformly in a box.
    RandomField,
}

impl ScenarioKind {
    /// The four two-cluster cases, in table order.
    pub const PAIRS: [ScenarioKind; 4] = [
        ScenarioKind::Overlap,
        ScenarioKind::Separate,
        ScenarioKind::Nested,
        ScenarioKind::Orthogonal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Overlap => "overlap",
            ScenarioKind::Separate => "separate",
            ScenarioKind::Nested => "nested",
            ScenarioKind::Orthogonal => "orthogonal",
            ScenarioKind::RandomField => "random_field",
        }
    }

    /// Whether the two clusters of this case should be merged.
    pub fn should_merge(self) -> Option<bool> {
        match self {
            ScenarioKind::Overlap | ScenarioKind::Nested => Some(true),
            ScenarioKind::Separate | ScenarioKind::Orthogonal => Some(false),
            ScenarioKind::RandomField => None,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ScenarioKind::Overlap,
            ScenarioKind::Separate,
            ScenarioKind::Nested,
            ScenarioKind::Orthogonal,
            ScenarioKind::RandomField,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::InvalidScenario(format!("unknown kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub dim: usize,
    pub seed: u64,
    /// Number of clusters for `RandomField`; ignored otherwise.
    pub count: usize,
    /// Inclusive sample-count range.
    pub n_range: (u64, u64),
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, dim: usize, seed: u64) -> Self {
        Self {
            kind,
            dim,
            seed,
            count: 20,
            n_range: (100, 500),
        }
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidScenario("dim must be at least 1".into()));
        }
        if self.kind == ScenarioKind::Orthogonal && self.dim < 2 {
            return Err(Error::InvalidScenario("orthogonal needs dim >= 2".into()));
        }
        if self.kind == ScenarioKind::RandomField && self.count < 2 {
            return Err(Error::InvalidScenario("random_field needs count >= 2".into()));
        }
        let (lo, hi) = self.n_range;
        if lo < 2 || lo > hi {
            return Err(Error::InvalidScenario(format!("bad n_range ({lo}, {hi})")));
        }
        Ok(())
    }
}

/// Numeric ranges behind the generators. All `(lo, hi)` pairs are sampled
/// uniformly unless stated otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Covariance eigenvalues for the two-cluster cases (log-uniform).
    pub eigen_range: (f64, f64),
    /// Variance scale of the second cluster relative to the first (overlap).
    pub overlap_scale: (f64, f64),
    /// Center gap in units of `sqrt(mean eigenvalue)` of the first cluster (overlap).
    pub overlap_gap: (f64, f64),
    /// Center gap in units of `sqrt(max eigenvalue)` (separate).
    pub separate_gap: (f64, f64),
    /// Variance scale of the small cluster relative to the big one (nested).
    pub nested_scale: (f64, f64),
    /// Dominant eigenvalue over the largest remaining eigenvalue (orthogonal).
    pub orthogonal_ratio: (f64, f64),
    /// Side length of the box holding random-field centers.
    pub field_box: f64,
    /// Covariance eigenvalues for random fields (log-uniform).
    pub field_eigen_range: (f64, f64),
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            eigen_range: (1.0, 4.0),
            overlap_scale: (4.0, 8.0),
            overlap_gap: (0.5, 1.5),
            separate_gap: (6.0, 10.0),
            nested_scale: (0.005, 0.02),
            orthogonal_ratio: (50.0, 200.0),
            field_box: 15.0,
            field_eigen_range: (0.02, 2.0),
        }
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn log_uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    uniform(rng, (lo.ln(), hi.ln())).exp()
}

fn unit_vector(rng: &mut impl Rng, d: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_rotation(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `R diag(eigenvalues) R^T`, symmetrized.
pub fn rotate_diagonal(rotation: &DMatrix<f64>, eigenvalues: &DVector<f64>) -> DMatrix<f64> {
    let mut m = rotation * DMatrix::from_diagonal(eigenvalues) * rotation.transpose();
    linalg::symmetrize(&mut m);
    m
}

fn log_uniform_eigenvalues(rng: &mut impl Rng, d: usize, range: (f64, f64)) -> DVector<f64> {
    DVector::from_fn(d, |_, _| log_uniform(rng, range))
}

/// Random SPD matrix with log-uniform eigenvalues in `range` and uniform orientation.
pub fn random_spd(rng: &mut impl Rng, d: usize, range: (f64, f64)) -> DMatrix<f64> {
    let lambda = log_uniform_eigenvalues(rng, d, range);
    let rotation = random_rotation(rng, d);
    rotate_diagonal(&rotation, &lambda)
}

pub fn generate(spec: &ScenarioSpec) -> Result<Vec<GaussianCluster>> {
    generate_with(spec, &ScenarioConfig::default())
}

pub fn generate_with(spec: &ScenarioSpec, config: &ScenarioConfig) -> Result<Vec<GaussianCluster>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rng = &mut rng;
    let d = spec.dim;
    let origin = DVector::zeros(d);

    if spec.kind == ScenarioKind::RandomField {
        return (0..spec.count)
            .map(|_| {
                let n = rng.random_range(spec.n_range.0..=spec.n_range.1);
                let center = DVector::from_fn(d, |_, _| uniform(rng, (0.0, config.field_box)));
                let cov = random_spd(rng, d, config.field_eigen_range);
                GaussianCluster::new(n, center, cov)
            })
            .collect();
    }

    let n = rng.random_range(spec.n_range.0..=spec.n_range.1);
    let (first, second) = match spec.kind {
        ScenarioKind::Overlap => {
            let lambda = log_uniform_eigenvalues(rng, d, config.eigen_range);
            let scale = uniform(rng, config.overlap_scale);
            let p = rotate_diagonal(&random_rotation(rng, d), &lambda);
            let q = rotate_diagonal(&random_rotation(rng, d), &lambda) * scale;
            let gap = uniform(rng, config.overlap_gap) * lambda.mean().sqrt();
            let center = unit_vector(rng, d) * gap;
            ((origin, p), (center, q))
        }
        ScenarioKind::Separate => {
            let lambda = log_uniform_eigenvalues(rng, d, config.eigen_range);
            let p = rotate_diagonal(&random_rotation(rng, d), &lambda);
            let q = rotate_diagonal(&random_rotation(rng, d), &lambda);
            let gap = uniform(rng, config.separate_gap) * lambda.max().sqrt();
            let center = unit_vector(rng, d) * gap;
            ((origin, p), (center, q))
        }
        ScenarioKind::Nested => {
            let big = random_spd(rng, d, config.eigen_range);
            let scale = uniform(rng, config.nested_scale);
            let small = &big * scale;
            // uniform point in the unit ball, mapped into the one-sigma ellipsoid
            let radius = rng.random::<f64>().powf(1.0 / d as f64);
            let u = unit_vector(rng, d) * radius;
            let center = linalg::cholesky(&big)?.l() * u;
            ((origin, big), (center, small))
        }
        ScenarioKind::Orthogonal => {
            let mut lambda = log_uniform_eigenvalues(rng, d, config.eigen_range);
            let rest = lambda.rows(1, d - 1).max();
            lambda[0] = uniform(rng, config.orthogonal_ratio) * rest;
            let rotation = random_rotation(rng, d);
            let mut swapped = lambda.clone();
            swapped.swap_rows(0, 1);
            let p = rotate_diagonal(&rotation, &lambda);
            let q = rotate_diagonal(&rotation, &swapped);
            ((origin.clone(), p), (origin, q))
        }
        ScenarioKind::RandomField => unreachable!(),
    };
    Ok(vec![
        GaussianCluster::new(n, first.0, first.1)?,
        GaussianCluster::new(n, second.0, second.1)?,
    ])
}

pub type Point = [f64; 2];

/// Closed polyline of the `k_sigma` level set of a 2-D cluster:
/// `segments + 1` points, the last equal to the first.
pub fn ellipse_points(c: &GaussianCluster, k_sigma: f64, segments: usize) -> Result<Vec<Point>> {
    ellipse_points_cov(c.mean(), c.cov(), k_sigma, segments)
}

/// As [`ellipse_points`] for a bare mean and PSD covariance (which may be singular).
pub fn ellipse_points_cov(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    k_sigma: f64,
    segments: usize,
) -> Result<Vec<Point>> {
    if mean.len() != 2 || cov.nrows() != 2 {
        return Err(Error::DimensionMismatch {
            left: 2,
            right: mean.len().max(cov.nrows()),
        });
    }
    if segments < 8 {
        return Err(Error::InvalidScenario(format!(
            "ellipse needs at least 8 segments, got {segments}"
        )));
    }
    let (values, vectors) = linalg::symmetric_eigen(cov)?;
    let axes = DMatrix::from_fn(2, 2, |i, j| k_sigma * vectors[(i, j)] * values[j].max(0.0).sqrt());
    let mut points: Vec<Point> = (0..segments)
        .map(|s| {
            let theta = std::f64::consts::TAU * s as f64 / segments as f64;
            let (sin, cos) = theta.sin_cos();
            [
                mean[0] + axes[(0, 0)] * cos + axes[(0, 1)] * sin,
                mean[1] + axes[(1, 0)] * cos + axes[(1, 1)] * sin,
            ]
        })
        .collect();
    points.push(points[0]);
    Ok(points)
}

/// Labelled polylines for a merge figure: each input, the merged cluster,
/// and the variance and center-distance contributions (each scaled by
/// `1 / (n_M - 1)` and drawn at the merged mean).
pub fn merge_figure(
    clusters: &[GaussianCluster],
    k_sigma: f64,
    segments: usize,
) -> Result<Vec<(String, Vec<Point>)>> {
    let mut out = Vec::with_capacity(clusters.len() + 3);
    for (i, c) in clusters.iter().enumerate() {
        out.push((format!("input {i}"), ellipse_points(c, k_sigma, segments)?));
    }
    let merged = merge_many(clusters)?;
    out.push(("merged".into(), ellipse_points(&merged, k_sigma, segments)?));
    let terms = merge_terms(clusters)?;
    for (label, term) in [("variance", &terms.variance), ("distance", &terms.distance)] {
        let c = terms.as_cluster(term);
        out.push((label.into(), ellipse_points_cov(c.mean(), c.cov(), k_sigma, segments)?));
    }
    Ok(out)
}

/// CSV of polylines: `x,y` rows, one blank line between polylines.
pub fn polylines_csv<'a>(lines: impl IntoIterator<Item = &'a [Point]>) -> String {
    let mut out = String::new();
    for (i, line) in lines.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for p in line {
            out.push_str(&format!("{},{}\n", p[0], p[1]));
        }
    }
    out
}
