//! Semantic clusters over response embeddings.
//!
//! Clusters are fit with Lloyd's algorithm from k-means++ seeds on raw
//! Euclidean geometry. Cluster indices are 0-based everywhere, including
//! every file this crate writes.
//!
//! Model file (`SKMC`), little-endian:
//!
//! ```text
//! magic "SKMC" | version u32 (= 1) | k u64 | d u64 | seed i64 |
//! iterations u32 | inertia f64 | k·d f64 centroids, row-major
//! ```

use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io_util::write_atomic;

pub const DEFAULT_K: usize = 20;
pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

pub const SKMC_MAGIC: &[u8; 4] = b"SKMC";
pub const SKMC_VERSION: u32 = 1;
const SKMC_HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8 + 4 + 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: DEFAULT_K,
            seed: 0,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

impl KMeansConfig {
    pub fn with_k(k: usize) -> Self {
        KMeansConfig {
            k,
            ..Default::default()
        }
    }
}

/// Fitted centroids plus the metadata needed to reproduce the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub centroids: Array2<f64>,
    pub seed: u64,
    pub iterations_run: u32,
    /// Sum of squared distances from each training point to its nearest
    /// final centroid.
    pub inertia: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterAssignment {
    pub k: usize,
    pub labels: Vec<usize>,
}

/// Empirical probability of each cluster among `support_n` assigned samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemanticDistribution {
    pub probs: Vec<f64>,
    pub support_n: usize,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest centroid; ties go to the lower
/// index.
fn nearest(point: ArrayView1<'_, f64>, centroids: ArrayView2<'_, f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.outer_iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign_all(x: ArrayView2<'_, f64>, centroids: ArrayView2<'_, f64>) -> Vec<(usize, f64)> {
    (0..x.nrows())
        .into_par_iter()
        .map(|i| nearest(x.row(i), centroids))
        .collect()
}

fn validate_points(x: ArrayView2<'_, f64>) -> Result<()> {
    for ((row, col), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

fn kmeans_pp_init(x: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = x.nrows();
    let mut centroids = Array2::zeros((k, x.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&x.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(first))).collect();

    for j in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave `acc` just short of `target`
            chosen.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(j).assign(&x.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            let nd = sq_dist(x.row(i), x.row(pick));
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(
    x: ArrayView2<'_, f64>,
    centroids: &mut Array2<f64>,
    assigned: &mut [(usize, f64)],
) {
    let k = centroids.nrows();
    let mut counts = vec![0usize; k];
    for &(l, _) in assigned.iter() {
        counts[l] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, &(l, d)) in assigned.iter().enumerate() {
            if counts[l] > 1 && best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let Some((i, _)) = best else { break };
        counts[assigned[i].0] -= 1;
        counts[j] = 1;
        centroids.row_mut(j).assign(&x.row(i));
        assigned[i] = (j, 0.0);
    }
}

fn update_means(x: ArrayView2<'_, f64>, assigned: &[(usize, f64)], previous: &Array2<f64>) -> Array2<f64> {
    let k = previous.nrows();
    let mut sums = Array2::<f64>::zeros(previous.dim());
    let mut counts = vec![0usize; k];
    for (i, &(l, _)) in assigned.iter().enumerate() {
        let mut row = sums.row_mut(l);
        row += &x.row(i);
        counts[l] += 1;
    }
    for (j, mut row) in sums.axis_iter_mut(Axis(0)).enumerate() {
        if counts[j] == 0 {
            row.assign(&previous.row(j));
        } else {
            row /= counts[j] as f64;
        }
    }
    sums
}

/// Fits `cfg.k` clusters to the rows of `x`.
pub fn kmeans_fit(x: ArrayView2<'_, f64>, cfg: &KMeansConfig) -> Result<ClusterModel> {
    kmeans_fit_traced(x, cfg).map(|(m, _)| m)
}

/// Like [`kmeans_fit`], also returning the inertia observed at every
/// iteration (after assignment) followed by the final inertia.
pub fn kmeans_fit_traced(x: ArrayView2<'_, f64>, cfg: &KMeansConfig) -> Result<(ClusterModel, Vec<f64>)> {
    let n = x.nrows();
    if cfg.k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    if n < cfg.k {
        return Err(Error::arg(format!("k = {} exceeds the {n} available points", cfg.k)));
    }
    if cfg.max_iter == 0 {
        return Err(Error::arg("max_iter must be at least 1"));
    }
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::arg("tol must be positive"));
    }
    validate_points(x)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = kmeans_pp_init(x, cfg.k, &mut rng);
    let mut trace = Vec::new();
    let mut iterations = 0u32;

    for _ in 0..cfg.max_iter {
        let mut assigned = assign_all(x, centroids.view());
        repair_empty(x, &mut centroids, &mut assigned);
        trace.push(assigned.iter().map(|&(_, d)| d).sum());

        let next = update_means(x, &assigned, &centroids);
        let shift = next
            .outer_iter()
            .zip(centroids.outer_iter())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        iterations += 1;
        if shift < cfg.tol {
            break;
        }
    }

    let inertia: f64 = assign_all(x, centroids.view()).iter().map(|&(_, d)| d).sum();
    trace.push(inertia);
    let model = ClusterModel {
        centroids,
        seed: cfg.seed,
        iterations_run: iterations,
        inertia,
    };
    Ok((model, trace))
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn dims(&self) -> usize {
        self.centroids.ncols()
    }

    /// Maps each row of `x` to its nearest centroid.
    pub fn assign(&self, x: ArrayView2<'_, f64>) -> Result<ClusterAssignment> {
        if x.ncols() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: x.ncols(),
            });
        }
        validate_points(x)?;
        let labels = assign_all(x, self.centroids.view())
            .into_iter()
            .map(|(l, _)| l)
            .collect();
        Ok(ClusterAssignment { k: self.k(), labels })
    }

    pub fn bitwise_eq(&self, other: &Self) -> bool {
        self.seed == other.seed
            && self.iterations_run == other.iterations_run
            && self.inertia.to_bits() == other.inertia.to_bits()
            && self.centroids.dim() == other.centroids.dim()
            && self
                .centroids
                .iter()
                .zip(other.centroids.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SKMC_HEADER_LEN + 8 * self.centroids.len());
        out.extend_from_slice(SKMC_MAGIC);
        out.extend_from_slice(&SKMC_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.k() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dims() as u64).to_le_bytes());
        out.extend_from_slice(&(self.seed as i64).to_le_bytes());
        out.extend_from_slice(&self.iterations_run.to_le_bytes());
        out.extend_from_slice(&self.inertia.to_le_bytes());
        for v in self.centroids.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != SKMC_MAGIC {
            return Err(Error::BadMagic {
                expected: "SKMC".into(),
                found: bytes.iter().take(4).copied().collect(),
            });
        }
        if bytes.len() < SKMC_HEADER_LEN {
            return Err(Error::Truncated {
                expected: SKMC_HEADER_LEN,
                found: bytes.len(),
            });
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != SKMC_VERSION {
            return Err(Error::UnsupportedVersion {
                expected: SKMC_VERSION,
                found: version,
            });
        }
        let k = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let d = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let seed = i64::from_le_bytes(bytes[24..32].try_into().unwrap()) as u64;
        let iterations_run = u32::from_le_bytes(bytes[32..36].try_into().unwrap());
        let inertia = f64::from_le_bytes(bytes[36..44].try_into().unwrap());
        if k == 0 {
            return Err(Error::arg("model file declares k = 0"));
        }
        let expected = k
            .checked_mul(d)
            .and_then(|c| c.checked_mul(8))
            .and_then(|c| usize::try_from(c).ok())
            .ok_or_else(|| Error::arg(format!("model dimensions {k}×{d} overflow")))?;
        let payload = &bytes[SKMC_HEADER_LEN..];
        if payload.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: payload.len(),
            });
        }
        if payload.len() > expected {
            return Err(Error::SizeMismatch {
                expected,
                found: payload.len(),
            });
        }
        let values: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let centroids = Array2::from_shape_vec((k as usize, d as usize), values)
            .expect("payload length checked against header");
        validate_points(centroids.view())?;
        if !(inertia.is_finite() && inertia >= 0.0) {
            return Err(Error::arg(format!("model file carries invalid inertia {inertia}")));
        }
        Ok(ClusterModel {
            centroids,
            seed,
            iterations_run,
            inertia,
        })
    }
}

pub fn assign(model: &ClusterModel, x: ArrayView2<'_, f64>) -> Result<ClusterAssignment> {
    model.assign(x)
}

pub fn save_model(model: &ClusterModel, path: &Path) -> Result<()> {
    write_atomic(path, &model.to_bytes())
}

pub fn load_model(path: &Path) -> Result<ClusterModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    ClusterModel::from_bytes(&bytes)
}

/// Scales each row to unit L2 norm; all-zero rows are left untouched.
pub fn l2_normalize_rows(x: &mut Array2<f64>) {
    for mut row in x.axis_iter_mut(Axis(0)) {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
}

/// `probs[j]` is the fraction of labels equal to `j`.
pub fn semantic_distribution(labels: &[usize], k: usize) -> Result<SemanticDistribution> {
    if labels.is_empty() {
        return Err(Error::arg("cannot estimate a distribution from zero labels"));
    }
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        if l >= k {
            return Err(Error::arg(format!("label {l} out of range for k = {k}")));
        }
        counts[l] += 1;
    }
    let n = labels.len();
    Ok(SemanticDistribution {
        probs: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        support_n: n,
    })
}

impl ClusterAssignment {
    pub fn distribution(&self) -> Result<SemanticDistribution> {
        semantic_distribution(&self.labels, self.k)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl SemanticDistribution {
    /// Wraps an explicit probability vector (entries in `[0, 1]`, summing to
    /// 1 within 1e-9). `support_n` is recorded as 0.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::arg("distribution needs at least one cluster"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::arg("probabilities must lie in [0, 1]"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(SemanticDistribution { probs, support_n: 0 })
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn uniform(k: usize) -> Self {
        SemanticDistribution {
            probs: vec![1.0 / k as f64; k],
            support_n: 0,
        }
    }
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Alignment {
            what: "second labeling",
            expected: a.len(),
            found: b.len(),
        });
    }
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&i, &j) in a.iter().zip(b) {
        table[i][j] += 1;
    }
    let c2 = |x: u64| (x * x.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().flatten().map(|&c| c2(c)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(n as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn column(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    }

    /// Minimum within-cluster sum of squares over every 2-partition.
    fn brute_force_two_partition(values: &[f64]) -> f64 {
        let n = values.len();
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << n) - 1 {
            let mut cost = 0.0;
            for side in [true, false] {
                let members: Vec<f64> = (0..n)
                    .filter(|&i| ((mask >> i) & 1 == 1) == side)
                    .map(|i| values[i])
                    .collect();
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                cost += members.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
            }
            best = best.min(cost);
        }
        best
    }

    #[test]
    fn four_point_fixture() {
        let values = [0.0, 0.1, 10.0, 10.1];
        let oracle = brute_force_two_partition(&values);
        assert!((oracle - 0.01).abs() < 1e-12);
        let m = kmeans_fit(column(&values).view(), &KMeansConfig::with_k(2)).unwrap();
        assert!((m.inertia - oracle).abs() < 1e-12);
        let mut cs: Vec<f64> = m.centroids.iter().copied().collect();
        cs.sort_by(f64::total_cmp);
        assert!((cs[0] - 0.05).abs() < 1e-12 && (cs[1] - 10.05).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_is_exact() {
        let x = array![[0.0, 1.0], [2.0, -1.0], [5.0, 5.0]];
        let m = kmeans_fit(x.view(), &KMeansConfig::with_k(3)).unwrap();
        assert_eq!(m.inertia, 0.0);
        let labels = m.assign(x.view()).unwrap().labels;
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(sorted, [0, 1, 2]);
    }

    #[test]
    fn argument_errors() {
        let x = column(&[1.0, 2.0]);
        assert!(kmeans_fit(x.view(), &KMeansConfig::with_k(0)).is_err());
        assert!(kmeans_fit(x.view(), &KMeansConfig::with_k(3)).is_err());
    }

    fn blobs(seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut data = Vec::new();
        let mut truth = Vec::new();
        for i in 0..100 {
            let c = if i % 2 == 0 { 0.0 } else { 1.0 };
            data.push(c + noise.sample(&mut rng));
            data.push(noise.sample(&mut rng));
            truth.push(i % 2);
        }
        (Array2::from_shape_vec((100, 2), data).unwrap(), truth)
    }

    #[test]
    fn planted_blobs_recovered() {
        for seed in 0..5 {
            let (x, truth) = blobs(seed);
            let cfg = KMeansConfig { k: 2, seed, ..Default::default() };
            let m = kmeans_fit(x.view(), &cfg).unwrap();
            let labels = m.assign(x.view()).unwrap().labels;
            assert_eq!(adjusted_rand_index(&labels, &truth).unwrap(), 1.0);
        }
    }

    #[test]
    fn deterministic_fit() {
        let (x, _) = blobs(3);
        let cfg = KMeansConfig { k: 5, seed: 11, ..Default::default() };
        let a = kmeans_fit(x.view(), &cfg).unwrap();
        let b = kmeans_fit(x.view(), &cfg).unwrap();
        assert!(a.bitwise_eq(&b));
    }

    #[test]
    fn assign_tie_breaks_low() {
        let model = ClusterModel {
            centroids: array![[9.0], [-1.0], [5.0], [1.0]],
            seed: 0,
            iterations_run: 0,
            inertia: 0.0,
        };
        let labels = model.assign(array![[0.0], [5.0], [9.0]].view()).unwrap().labels;
        assert_eq!(labels, [1, 2, 0]);
        assert!(model.assign(array![[0.0, 1.0]].view()).is_err());
    }

    #[test]
    fn assign_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let centroids = Array2::from_shape_fn((7, 3), |_| rng.random_range(-1.0..1.0));
        let x = Array2::from_shape_fn((200, 3), |_| rng.random_range(-1.5..1.5));
        let model = ClusterModel { centroids: centroids.clone(), seed: 0, iterations_run: 0, inertia: 0.0 };
        let labels = model.assign(x.view()).unwrap().labels;
        for (i, row) in x.outer_iter().enumerate() {
            let dists: Vec<f64> = centroids
                .outer_iter()
                .map(|c| row.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum())
                .collect();
            let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(labels[i], dists.iter().position(|&d| d == min).unwrap());
        }
    }

    #[test]
    fn distribution_fixtures() {
        let d = semantic_distribution(&[0, 0, 1, 2], 4).unwrap();
        assert_eq!(d.probs, [0.5, 0.25, 0.25, 0.0]);
        assert_eq!(semantic_distribution(&[2, 2], 3).unwrap().probs, [0.0, 0.0, 1.0]);
        assert_eq!(semantic_distribution(&[3, 1, 0, 2], 4).unwrap().probs, [0.25; 4]);
        assert!(semantic_distribution(&[], 4).is_err());
        assert!(semantic_distribution(&[4], 4).is_err());
    }

    #[test]
    fn empty_cluster_repair_preserves_k() {
        // Ten copies of one point and one outlier: k-means++ must place a
        // centroid on a duplicate, and repair keeps every cluster populated.
        let mut values = vec![0.0; 10];
        values.push(100.0);
        values.push(50.0);
        let x = column(&values);
        let m = kmeans_fit(x.view(), &KMeansConfig::with_k(3)).unwrap();
        assert_eq!(m.k(), 3);
        let d = m.assign(x.view()).unwrap().distribution().unwrap();
        assert!(d.probs.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn model_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.skmc");
        let tiny = ClusterModel { centroids: array![[1.5]], seed: 3, iterations_run: 1, inertia: 0.0 };
        save_model(&tiny, &p).unwrap();
        assert!(load_model(&p).unwrap().bitwise_eq(&tiny));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let big = ClusterModel {
            centroids: Array2::from_shape_fn((20, 768), |_| rng.random::<f64>() - 0.5),
            seed: u64::MAX,
            iterations_run: 42,
            inertia: 123.456,
        };
        save_model(&big, &p).unwrap();
        assert!(load_model(&p).unwrap().bitwise_eq(&big));

        let mut bytes = big.to_bytes();
        bytes[0] = b'X';
        assert!(matches!(ClusterModel::from_bytes(&bytes), Err(Error::BadMagic { .. })));
        let mut bytes = big.to_bytes();
        bytes[4] = 9;
        assert!(matches!(ClusterModel::from_bytes(&bytes), Err(Error::UnsupportedVersion { .. })));
        let bytes = big.to_bytes();
        assert!(matches!(
            ClusterModel::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn normalize_rows() {
        let mut x = array![[3.0, 4.0], [0.0, 0.0]];
        l2_normalize_rows(&mut x);
        assert_eq!(x, array![[0.6, 0.8], [0.0, 0.0]]);
    }

    #[test]
    fn ari_basics() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap() < 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn lloyd_inertia_non_increasing(seed in any::<u64>(), n in 4usize..60, k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-5.0..5.0));
            let cfg = KMeansConfig { k: k.min(n), seed, ..Default::default() };
            let (m, trace) = kmeans_fit_traced(x.view(), &cfg).unwrap();
            for w in trace.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "trace {:?}", trace);
            }
            prop_assert_eq!(*trace.last().unwrap(), m.inertia);
            // distinct inputs yield distinct centroids
            for a in 0..m.k() {
                for b in a + 1..m.k() {
                    prop_assert!(m.centroids.row(a) != m.centroids.row(b));
                }
            }
        }

        #[test]
        fn distribution_sums_to_one(labels in proptest::collection::vec(0usize..6, 1..50)) {
            let d = semantic_distribution(&labels, 6).unwrap();
            prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (j, &p) in d.probs.iter().enumerate() {
                let count = labels.iter().filter(|&&l| l == j).count();
                prop_assert_eq!(p, count as f64 / labels.len() as f64);
            }
        }
    }
}
