//! Sem-Ent: entropy (in nats) of the semantic cluster distribution of a set
//! of generated responses. Its ceiling is `ln k`, reached when generations
//! cover every cluster equally.

use std::cmp::Ordering;

use serde::Serialize;

use crate::clustering::SemanticDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemEntScore {
    /// Entropy in nats.
    pub value: f64,
    pub k: usize,
    /// `value / ln k`, or 0 when `k == 1`. Comparable across cluster counts.
    pub normalized: f64,
}

impl SemEntScore {
    pub fn new(value: f64, k: usize) -> Self {
        let normalized = if k > 1 {
            (value / (k as f64).ln()).clamp(0.0, 1.0)
        } else {
            0.0
        };
        SemEntScore { value, k, normalized }
    }
}

/// `-Σ p ln p` with `0 ln 0 = 0`.
///
/// Terms are summed in ascending order, so relabeling clusters leaves the
/// value bit-for-bit unchanged.
pub fn sem_ent(dist: &SemanticDistribution) -> SemEntScore {
    let mut terms: Vec<f64> = dist
        .probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .collect();
    terms.sort_unstable_by(f64::total_cmp);
    let value = terms.iter().sum::<f64>().max(0.0);
    SemEntScore::new(value, dist.k())
}

/// Orders by raw value when both scores share `k`, otherwise by the
/// normalized value.
pub fn compare_sement(a: &SemEntScore, b: &SemEntScore) -> Ordering {
    if a.k == b.k {
        a.value.total_cmp(&b.value)
    } else {
        a.normalized.total_cmp(&b.normalized)
    }
}
