//! Overlap and dissimilarity measures between two Gaussian clusters.
//!
//! Seven measures share one interface:
//!
//! | kind     | meaning                                                    | merge when      |
//! |----------|------------------------------------------------------------|-----------------|
//! | `B`      | Bhattacharyya distance                                     | calibrated      |
//! | `JS`     | Jensen-Shannon divergence against the mean Gaussian        | calibrated      |
//! | `W`      | squared 2-Wasserstein distance                             | calibrated      |
//! | `eGauss` | merged determinant over the sum of determinants            | `< 1`           |
//! | `aB`     | Bhattacharyya with the arithmetic mean of determinants     | calibrated      |
//! | `O`      | log of merged volume over mean volume                      | `< 0`           |
//! | `Oh`     | `O` with every log-determinant replaced by its Hadamard bound | `< 0`        |
//!
//! All log-determinants come from Cholesky factors, so every measure except
//! `eGauss` stays finite at high dimension.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cluster::{merge_pair, merged_diagonal, GaussianCluster};
use crate::error::{Error, Result};
use crate::linalg::{self, CholeskyFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeasureKind {
    #[serde(rename = "B")]
    Bhattacharyya,
    #[serde(rename = "JS")]
    JensenShannon,
    #[serde(rename = "W")]
    Wasserstein,
    #[serde(rename = "eGauss")]
    EGauss,
    #[serde(rename = "aB")]
    ArithmeticBhattacharyya,
    #[serde(rename = "O")]
    Overlap,
    #[serde(rename = "Oh")]
    OverlapHadamard,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 7] = [
        MeasureKind::Bhattacharyya,
        MeasureKind::JensenShannon,
        MeasureKind::Wasserstein,
        MeasureKind::EGauss,
        MeasureKind::ArithmeticBhattacharyya,
        MeasureKind::Overlap,
        MeasureKind::OverlapHadamard,
    ];

    /// Short name used on the command line and in tables.
    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Bhattacharyya => "B",
            MeasureKind::JensenShannon => "JS",
            MeasureKind::Wasserstein => "W",
            MeasureKind::EGauss => "eGauss",
            MeasureKind::ArithmeticBhattacharyya => "aB",
            MeasureKind::Overlap => "O",
            MeasureKind::OverlapHadamard => "Oh",
        }
    }

    /// Whether `measure(p, p)` is identically zero.
    pub fn has_zero_self_value(self) -> bool {
        !matches!(
            self,
            MeasureKind::EGauss | MeasureKind::Overlap | MeasureKind::OverlapHadamard
        )
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeasureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownMeasure(s.to_string()))
    }
}

/// One timed evaluation of a measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult {
    pub kind: MeasureKind,
    pub value: f64,
    pub elapsed_us: f64,
}

/// `ln((e^a + e^b) / 2)` without overflow.
pub fn log_mean_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::INFINITY {
        return hi;
    }
    hi + ((1.0 + (-(a - b).abs()).exp()) / 2.0).ln()
}

fn check_dims(p: &GaussianCluster, q: &GaussianCluster) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    Ok(())
}

fn average_cov(p: &GaussianCluster, q: &GaussianCluster) -> DMatrix<f64> {
    let mut avg = (p.cov() + q.cov()) * 0.5;
    linalg::symmetrize(&mut avg);
    avg
}

/// Bhattacharyya distance, evaluated entirely with log-determinants.
pub fn bhattacharyya(p: &GaussianCluster, q: &GaussianCluster) -> Result<f64> {
    check_dims(p, q)?;
    let ld_p = linalg::log_det_psd(p.cov())?;
    let ld_q = linalg::log_det_psd(q.cov())?;
    let avg = linalg::cholesky(&average_cov(p, q))?;
    let delta = q.mean() - p.mean();
    Ok(avg.mahalanobis_sq(delta.as_slice()) / 8.0 + 0.5 * (avg.log_det() - 0.5 * (ld_p + ld_q)))
}

fn kl_with_factor(
    p: &GaussianCluster,
    ld_p: f64,
    m_mean: &nalgebra::DVector<f64>,
    m: &CholeskyFactor,
) -> f64 {
    let delta = m_mean - p.mean();
    0.5 * (m.trace_solve(p.cov()) + m.log_det() - ld_p + m.mahalanobis_sq(delta.as_slice())
        - p.dim() as f64)
}

/// `KL(p || m)` between two Gaussians. Traces and quadratic forms use
/// Cholesky solves against `m`'s covariance.
pub fn kl_divergence(p: &GaussianCluster, m: &GaussianCluster) -> Result<f64> {
    check_dims(p, m)?;
    let ld_p = linalg::log_det_psd(p.cov())?;
    let fm = linalg::cholesky(m.cov())?;
    Ok(kl_with_factor(p, ld_p, m.mean(), &fm))
}

/// Jensen-Shannon divergence using the moment-averaged Gaussian
/// `M = N((mu_p + mu_q)/2, (S_p + S_q)/2)` as the midpoint.
pub fn jensen_shannon(p: &GaussianCluster, q: &GaussianCluster) -> Result<f64> {
    check_dims(p, q)?;
    let ld_p = linalg::log_det_psd(p.cov())?;
    let ld_q = linalg::log_det_psd(q.cov())?;
    let m_mean = (p.mean() + q.mean()) * 0.5;
    let fm = linalg::cholesky(&average_cov(p, q))?;
    Ok(0.5 * (kl_with_factor(p, ld_p, &m_mean, &fm) + kl_with_factor(q, ld_q, &m_mean, &fm)))
}

/// Squared 2-Wasserstein distance between two Gaussians.
pub fn wasserstein2(p: &GaussianCluster, q: &GaussianCluster) -> Result<f64> {
    check_dims(p, q)?;
    let root_p = linalg::psd_sqrt(p.cov())?;
    let mut inner = &root_p * q.cov() * &root_p;
    linalg::symmetrize(&mut inner);
    let cross = linalg::psd_sqrt(&inner)?;
    let gap = (p.mean() - q.mean()).norm_squared();
    let value = gap + p.cov().trace() + q.cov().trace() - 2.0 * cross.trace();
    Ok(value.max(0.0))
}

// Plain determinant from the Cholesky diagonal; overflows like a naive determinant would.
fn raw_det(a: &DMatrix<f64>) -> Result<f64> {
    Ok(linalg::cholesky(a)?.diagonal().map(|l| l * l).product())
}

/// Volume ratio `det(S_M) / (det S_p + det S_q)` with `S_M` the sample-weighted
/// merged covariance.
///
/// Determinants are formed directly, so the value overflows to `inf` or `NaN`
/// once the determinants leave double range (for example `d = 100` with
/// variances around `1e4`).
pub fn egauss_ratio(p: &GaussianCluster, q: &GaussianCluster) -> Result<f64> {
    check_dims(p, q)?;
    let merged = merge_pair(p, q)?;
    Ok(raw_det(merged.cov())? / (raw_det(p.cov())? + raw_det(q.cov())?))
}

/// How the arithmetic-mean Bhattacharyya variant treats the distance between centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArithmeticVariant {
    /// Keep the Mahalanobis term against `(S_p + S_q) / 2`.
    #[default]
    MahalanobisTerm,
    /// Drop the Mahalanobis term and take the log-determinant of the
    /// sample-weighted merged covariance, which already carries the center
    /// distance as a rank-one term.
    MergedCovariance,
}

/// Bhattacharyya distance with the geometric mean of the determinants
/// replaced by their arithmetic mean (default variant).
pub fn arithmetic_bhattacharyya(p: &GaussianCluster, q: &GaussianCluster) -> Result<f64> {
    arithmetic_bhattacharyya_with(p, q, ArithmeticVariant::default())
}

pub fn arithmetic_bhattacharyya_with(
    p: &GaussianCluster,
    q: &GaussianCluster,
    variant: ArithmeticVariant,
) -> Result<f64> {
    check_dims(p, q)?;
    let ld_p = linalg::log_det_psd(p.cov())?;
    let ld_q = linalg::log_det_psd(q.cov())?;
    let mean_volume = log_mean_exp(ld_p, ld_q);
    match variant {
        ArithmeticVariant::MahalanobisTerm => {
            let avg = linalg::cholesky(&average_cov(p, q))?;
            let delta = q.mean() - p.mean();
            Ok(avg.mahalanobis_sq(delta.as_slice()) / 8.0 + 0.5 * (avg.log_det() - mean_volume))
        }
        ArithmeticVariant::MergedCovariance => {
            let merged = merge_pair(p, q)?;
            Ok(0.5 * (linalg::log_det_psd(merged.cov())? - mean_volume))
        }
    }
}

/// Overlap measure: `ln(det S_M / ((det S_p + det S_q) / 2))` in log form.
///
/// Negative exactly when the merged ellipsoid has less volume than the mean
/// of the two input volumes.
pub fn overlap(p: &GaussianCluster, q: &GaussianCluster) -> Result<f64> {
    check_dims(p, q)?;
    let merged = merge_pair(p, q)?;
    let ld_m = linalg::log_det_psd(merged.cov())?;
    let ld_p = linalg::log_det_psd(p.cov())?;
    let ld_q = linalg::log_det_psd(q.cov())?;
    Ok(ld_m - log_mean_exp(ld_p, ld_q))
}

/// [`overlap`] with each log-determinant replaced by the Hadamard bound
/// `sum(ln s_ii)`. Needs only diagonals, so no factorization is done.
pub fn overlap_hadamard(p: &GaussianCluster, q: &GaussianCluster) -> Result<f64> {
    check_dims(p, q)?;
    let h_m = linalg::diagonal_log_sum(merged_diagonal(p, q)?.into_iter())?;
    let h_p = linalg::diagonal_log_sum(p.cov().diagonal().iter().copied())?;
    let h_q = linalg::diagonal_log_sum(q.cov().diagonal().iter().copied())?;
    Ok(h_m - log_mean_exp(h_p, h_q))
}

/// Evaluates `kind` on a pair.
pub fn measure(kind: MeasureKind, p: &GaussianCluster, q: &GaussianCluster) -> Result<f64> {
    match kind {
        MeasureKind::Bhattacharyya => bhattacharyya(p, q),
        MeasureKind::JensenShannon => jensen_shannon(p, q),
        MeasureKind::Wasserstein => wasserstein2(p, q),
        MeasureKind::EGauss => egauss_ratio(p, q),
        MeasureKind::ArithmeticBhattacharyya => arithmetic_bhattacharyya(p, q),
        MeasureKind::Overlap => overlap(p, q),
        MeasureKind::OverlapHadamard => overlap_hadamard(p, q),
    }
}

pub(crate) const WARMUP_RUNS: usize = 3;

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Wall time of each of `repeats` calls, in microseconds, after a few warm-up calls.
pub fn sample_times(
    kind: MeasureKind,
    p: &GaussianCluster,
    q: &GaussianCluster,
    repeats: usize,
) -> Result<(f64, Vec<f64>)> {
    let value = measure(kind, p, q)?;
    for _ in 1..WARMUP_RUNS {
        std::hint::black_box(measure(kind, p, q)?);
    }
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        let v = measure(kind, std::hint::black_box(p), std::hint::black_box(q));
        let elapsed = start.elapsed();
        std::hint::black_box(v)?;
        times.push(elapsed.as_secs_f64() * 1e6);
    }
    Ok((value, times))
}

/// Evaluates `kind` and reports the median wall time over `repeats` calls.
pub fn timed(
    kind: MeasureKind,
    p: &GaussianCluster,
    q: &GaussianCluster,
    repeats: usize,
) -> Result<MeasureResult> {
    let (value, mut times) = sample_times(kind, p, q, repeats.max(1))?;
    Ok(MeasureResult {
        kind,
        value,
        elapsed_us: median(&mut times),
    })
}

/// Symmetric `c x c` matrix of `kind` over all unordered pairs; the diagonal
/// holds `measure(p, p)`.
pub fn pairwise_matrix(clusters: &[GaussianCluster], kind: MeasureKind) -> Result<DMatrix<f64>> {
    let c = clusters.len();
    if c < 2 {
        return Err(Error::Empty("need at least two clusters"));
    }
    let mut m = DMatrix::zeros(c, c);
    for i in 0..c {
        m[(i, i)] = if kind.has_zero_self_value() {
            0.0
        } else {
            measure(kind, &clusters[i], &clusters[i]).map_err(|e| pair_error(i, i, e))?
        };
        for j in (i + 1)..c {
            let v = measure(kind, &clusters[i], &clusters[j]).map_err(|e| pair_error(i, j, e))?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

fn pair_error(i: usize, j: usize, e: Error) -> Error {
    Error::Pair {
        i,
        j,
        source: Box::new(e),
    }
}

/// Symmetric boolean relation over `size` clusters with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    size: usize,
    bits: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn empty(size: usize) -> Self {
        Self {
            size,
            bits: vec![false; size * size],
        }
    }

    /// Builds from an edge list. Self-loops are ignored.
    pub fn from_edges(size: usize, edges: &[(usize, usize)]) -> Self {
        let mut a = Self::empty(size);
        for &(i, j) in edges {
            a.set(i, j, true);
        }
        a
    }

    /// Builds from boolean rows, symmetrizing with logical OR and clearing the diagonal.
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let size = rows.len();
        let mut a = Self::empty(size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::DimensionMismatch {
                    left: size,
                    right: row.len(),
                });
            }
            for (j, &b) in row.iter().enumerate() {
                if b {
                    a.set(i, j, true);
                }
            }
        }
        Ok(a)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        if i == j {
            return;
        }
        self.bits[i * self.size + j] = value;
        self.bits[j * self.size + i] = value;
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.size + j]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(move |&j| self.has_edge(i, j))
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.size)
            .flat_map(|i| ((i + 1)..self.size).map(move |j| (i, j)))
            .filter(|&(i, j)| self.has_edge(i, j))
            .collect()
    }

    pub fn rows(&self) -> Vec<Vec<bool>> {
        self.bits.chunks(self.size.max(1)).take(self.size).map(<[bool]>::to_vec).collect()
    }
}

/// Marks `i ~ j` whenever `m[i][j] < threshold` (off-diagonal only).
/// `NaN` entries never produce an edge.
pub fn adjacency_from_threshold(m: &DMatrix<f64>, threshold: f64) -> AdjacencyMatrix {
    let c = m.nrows();
    let mut a = AdjacencyMatrix::empty(c);
    for i in 0..c {
        for j in (i + 1)..c {
            if m[(i, j)] < threshold {
                a.set(i, j, true);
            }
        }
    }
    a
}

/// Per-measure merge thresholds: a pair is a merge candidate when its value is
/// strictly below the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    values: [Option<f64>; 7],
}

impl Default for Thresholds {
    /// `O` and `Oh` at 0, `eGauss` at 1; the distance measures have no natural
    /// threshold and must be set or calibrated.
    fn default() -> Self {
        let mut t = Self { values: [None; 7] };
        t.set(MeasureKind::Overlap, 0.0);
        t.set(MeasureKind::OverlapHadamard, 0.0);
        t.set(MeasureKind::EGauss, 1.0);
        t
    }
}

impl Thresholds {
    fn index(kind: MeasureKind) -> usize {
        MeasureKind::ALL.iter().position(|&k| k == kind).unwrap()
    }

    pub fn get(&self, kind: MeasureKind) -> Option<f64> {
        self.values[Self::index(kind)]
    }

    pub fn set(&mut self, kind: MeasureKind, threshold: f64) {
        self.values[Self::index(kind)] = Some(threshold);
    }

    pub fn with(mut self, kind: MeasureKind, threshold: f64) -> Self {
        self.set(kind, threshold);
        self
    }
}

/// `value < threshold`; non-finite values never merge.
pub fn merge_verdict(value: f64, threshold: f64) -> bool {
    value.is_finite() && value < threshold
}

/// Picks the threshold that best separates values that should merge (want
/// `< t`) from values that should not (want `>= t`).
///
/// Candidates are midpoints between consecutive distinct finite values; ties in
/// accuracy go to the widest gap. Returns `None` if either side has no finite values.
pub fn calibrate_threshold(merge: &[f64], keep: &[f64]) -> Option<f64> {
    let mut labelled: Vec<(f64, bool)> = merge
        .iter()
        .map(|&v| (v, true))
        .chain(keep.iter().map(|&v| (v, false)))
        .filter(|(v, _)| v.is_finite())
        .collect();
    if !labelled.iter().any(|l| l.1) || !labelled.iter().any(|l| !l.1) {
        return None;
    }
    labelled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let total_keep = labelled.iter().filter(|l| !l.1).count();
    // Threshold between position k-1 and k: first k values fall below it.
    let mut merges_below = 0;
    let mut keeps_below = 0;
    let mut best: Option<(usize, f64, f64)> = None;
    for k in 1..labelled.len() {
        if labelled[k - 1].1 {
            merges_below += 1;
        } else {
            keeps_below += 1;
        }
        let (lo, hi) = (labelled[k - 1].0, labelled[k].0);
        if lo == hi {
            continue;
        }
        let correct = merges_below + (total_keep - keeps_below);
        let gap = hi - lo;
        let better = match best {
            None => true,
            Some((c, g, _)) => correct > c || (correct == c && gap > g),
        };
        if better {
            best = Some((correct, gap, lo + 0.5 * gap));
        }
    }
    best.map(|b| b.2)
}
