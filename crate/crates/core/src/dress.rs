//! DRESS sample weights.
//!
//! Each training response gets the focal weight `(1 - p)^γ`, where `p` is the
//! training-set probability of its semantic cluster, so responses from
//! frequent clusters contribute less to the weighted NLL objective.
//! Generations that land in a head cluster can additionally be flagged as
//! negative examples with the sentinel weight `-1`.
//!
//! The weight file is JSONL, one line per entry:
//! `{"id": str, "cluster": int, "weight": float, "nt": bool}` with weights
//! printed to 17 significant digits so they parse back bit-exactly.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterAssignment, SemanticDistribution};
use crate::corpus::ResponseCorpus;
use crate::error::{Error, Result};
use crate::io_util::write_atomic;

pub const DEFAULT_GAMMA: f64 = 30.0;
pub const NT_WEIGHT: f64 = -1.0;

pub fn focal_weight(p: f64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::arg(format!("probability {p} outside [0, 1]")));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::arg(format!("gamma must be finite and non-negative, got {gamma}")));
    }
    Ok((1.0 - p).powf(gamma))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub id: String,
    pub cluster: usize,
    pub weight: f64,
    /// Negative-training example.
    pub nt: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub entries: Vec<WeightEntry>,
    pub gamma: f64,
    pub k: usize,
    /// Positive weights were rescaled to mean 1 and may exceed 1.
    pub renormalized: bool,
}

impl WeightTable {
    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.weight).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn negatives(&self) -> usize {
        self.entries.iter().filter(|e| e.nt).count()
    }

    /// Checks the weight invariant: each weight is either exactly `-1` on a
    /// flagged entry or a positive focal weight (at most 1 unless
    /// renormalized).
    pub fn is_valid(&self) -> bool {
        self.entries.iter().all(|e| {
            if e.nt {
                e.weight == NT_WEIGHT
            } else {
                e.weight > 0.0 && (self.renormalized || e.weight <= 1.0)
            }
        })
    }

    /// Rescales positive weights so their mean is 1; negatives keep `-1`.
    pub fn renormalize(&self) -> Result<WeightTable> {
        let positives: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| !e.nt)
            .map(|e| e.weight)
            .collect();
        if positives.is_empty() {
            return Err(Error::arg("no positive weights to renormalize"));
        }
        let mean = positives.iter().sum::<f64>() / positives.len() as f64;
        let mut out = self.clone();
        for e in out.entries.iter_mut().filter(|e| !e.nt) {
            e.weight /= mean;
        }
        out.renormalized = true;
        Ok(out)
    }
}

/// Focal weights for `ids[i]` in cluster `labels[i]`.
///
/// A weight that evaluates to 0 (a single-cluster training set, or underflow
/// at large γ) or a subnormal is raised to the smallest positive normal
/// `f64`, with a warning.
pub fn compute_weights_for_ids<'a, I>(
    ids: I,
    labels: &ClusterAssignment,
    dist: &SemanticDistribution,
    gamma: f64,
) -> Result<WeightTable>
where
    I: IntoIterator<Item = &'a str>,
{
    if labels.k != dist.k() {
        return Err(Error::DimensionMismatch {
            expected: dist.k(),
            found: labels.k,
        });
    }
    let ids: Vec<&str> = ids.into_iter().collect();
    if ids.len() != labels.len() {
        return Err(Error::Alignment {
            what: "cluster labels",
            expected: ids.len(),
            found: labels.len(),
        });
    }
    // one weight per cluster, shared by all its members
    let per_cluster = dist
        .probs
        .iter()
        .map(|&p| focal_weight(p, gamma))
        .collect::<Result<Vec<_>>>()?;

    let mut clamped = 0usize;
    let entries = ids
        .iter()
        .zip(&labels.labels)
        .map(|(id, &cluster)| {
            let mut weight = per_cluster[cluster];
            if weight < f64::MIN_POSITIVE {
                weight = f64::MIN_POSITIVE;
                clamped += 1;
            }
            WeightEntry {
                id: (*id).to_owned(),
                cluster,
                weight,
                nt: false,
            }
        })
        .collect();
    if clamped > 0 {
        log::warn!(
            "{clamped} focal weights evaluated to zero or a subnormal and were raised to {:e}",
            f64::MIN_POSITIVE
        );
    }
    Ok(WeightTable {
        entries,
        gamma,
        k: dist.k(),
        renormalized: false,
    })
}

pub fn compute_weights(
    corpus: &ResponseCorpus,
    labels: &ClusterAssignment,
    dist: &SemanticDistribution,
    gamma: f64,
) -> Result<WeightTable> {
    compute_weights_for_ids(corpus.ids(), labels, dist, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case", tag = "policy", content = "m")]
pub enum HeadPolicy {
    /// Clusters with probability strictly above `1/k`.
    #[default]
    AboveUniform,
    /// The `m` most probable clusters, ties to the lower index.
    TopM(usize),
}

impl FromStr for HeadPolicy {
    type Err = Error;

    /// Accepts `above-uniform`, `top-m` (m = 5) or `top-<m>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "above-uniform" => Ok(HeadPolicy::AboveUniform),
            "top-m" => Ok(HeadPolicy::TopM(5)),
            other => other
                .strip_prefix("top-")
                .and_then(|m| m.parse().ok())
                .map(HeadPolicy::TopM)
                .ok_or_else(|| Error::arg(format!("unknown head policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeadClusterSet {
    pub clusters: BTreeSet<usize>,
    pub policy: HeadPolicy,
}

impl HeadClusterSet {
    pub fn contains(&self, cluster: usize) -> bool {
        self.clusters.contains(&cluster)
    }

    /// Total probability mass of the head clusters under `dist`.
    pub fn mass(&self, dist: &SemanticDistribution) -> f64 {
        self.clusters.iter().map(|&j| dist.probs[j]).sum()
    }
}

pub fn head_clusters(dist: &SemanticDistribution, policy: HeadPolicy) -> Result<HeadClusterSet> {
    let k = dist.k();
    let clusters = match policy {
        HeadPolicy::AboveUniform => {
            let uniform = 1.0 / k as f64;
            (0..k).filter(|&j| dist.probs[j] > uniform).collect()
        }
        HeadPolicy::TopM(m) => {
            if m > k {
                return Err(Error::arg(format!("top-{m} requested but only {k} clusters exist")));
            }
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| dist.probs[b].total_cmp(&dist.probs[a]).then(a.cmp(&b)));
            order.into_iter().take(m).collect()
        }
    };
    Ok(HeadClusterSet { clusters, policy })
}

/// Flags entries whose generated response fell into a head cluster.
///
/// `generated_labels[i]` is the cluster of the response generated for the
/// context of entry `i`. Flagged entries describe that generated sample: they
/// carry its cluster, weight `-1` and `nt = true`. Other entries are copied
/// unchanged.
pub fn apply_nt_flags(
    table: &WeightTable,
    generated_labels: &ClusterAssignment,
    heads: &HeadClusterSet,
) -> Result<WeightTable> {
    if generated_labels.len() != table.len() {
        return Err(Error::Alignment {
            what: "generated labels",
            expected: table.len(),
            found: generated_labels.len(),
        });
    }
    let mut out = table.clone();
    for (entry, &g) in out.entries.iter_mut().zip(&generated_labels.labels) {
        if heads.contains(g) {
            entry.cluster = g;
            entry.weight = NT_WEIGHT;
            entry.nt = true;
        }
    }
    Ok(out)
}

/// Checks the DRESS ordering constraint over all pairs of positive entries:
/// a response from a less probable cluster never weighs less than one from a
/// more probable cluster. Returns the first violating pair.
pub fn find_monotonicity_violation(
    table: &WeightTable,
    dist: &SemanticDistribution,
) -> Option<(usize, usize)> {
    let pos: Vec<(usize, f64, f64)> = table
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.nt)
        .map(|(i, e)| (i, dist.probs[e.cluster], e.weight))
        .collect();
    // sort by probability; weights must then be non-increasing, with equal
    // probabilities carrying equal weights
    let mut sorted = pos.clone();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    for w in sorted.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.2 < b.2 || (a.1 == b.1 && a.2 != b.2) {
            return Some((a.0, b.0));
        }
    }
    None
}

/// `{:.16e}` gives 17 significant digits, enough to round-trip any `f64`.
fn fmt_weight(w: f64) -> String {
    format!("{w:.16e}")
}

pub fn render_weights(table: &WeightTable) -> String {
    let mut out = String::new();
    for e in &table.entries {
        let id = serde_json::to_string(&e.id).expect("string serialization is infallible");
        let _ = writeln!(
            out,
            "{{\"id\":{id},\"cluster\":{},\"weight\":{},\"nt\":{}}}",
            e.cluster,
            fmt_weight(e.weight),
            e.nt
        );
    }
    out
}

pub fn write_weights(table: &WeightTable, path: &Path) -> Result<()> {
    write_atomic(path, render_weights(table).as_bytes())
}

pub fn read_weights(path: &Path) -> Result<Vec<WeightEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
