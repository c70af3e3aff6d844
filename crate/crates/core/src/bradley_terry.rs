//! Bradley–Terry scores from pairwise Likert annotations.
//!
//! Each annotation compares items A and B on a 5-point scale where values
//! above 3 favor A, below 3 favor B, and 3 is a tie. Outcomes are fit by
//! minorization–maximization (Hunter, 2004), which increases the
//! log-likelihood at every step.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseAnnotation {
    #[serde(rename = "a")]
    pub item_a: String,
    #[serde(rename = "b")]
    pub item_b: String,
    pub likert: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// A tie credits each side with half a win.
    #[default]
    Half,
    Drop,
}

/// Win counts between items, indexed by position in `items` (sorted ids).
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeCounts {
    pub items: Vec<String>,
    /// `wins[[i, j]]`: (possibly fractional) number of times `i` beat `j`.
    pub wins: Array2<f64>,
}

impl OutcomeCounts {
    pub fn index_of(&self, item: &str) -> Option<usize> {
        self.items.binary_search_by(|x| x.as_str().cmp(item)).ok()
    }

    pub fn wins_between(&self, winner: &str, loser: &str) -> f64 {
        match (self.index_of(winner), self.index_of(loser)) {
            (Some(i), Some(j)) => self.wins[[i, j]],
            _ => 0.0,
        }
    }
}

pub fn read_annotations(path: &Path) -> Result<Vec<PairwiseAnnotation>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let a: PairwiseAnnotation = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        if a.item_a == a.item_b {
            return Err(parse_err(format!("item {:?} compared with itself", a.item_a)));
        }
        if !(1..=5).contains(&a.likert) {
            return Err(parse_err(format!("likert value {} outside 1..=5", a.likert)));
        }
        out.push(a);
    }
    Ok(out)
}

pub fn likert_to_outcomes(annotations: &[PairwiseAnnotation], ties: TiePolicy) -> Result<OutcomeCounts> {
    let items: Vec<String> = annotations
        .iter()
        .flat_map(|a| [a.item_a.clone(), a.item_b.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = items.len();
    let mut out = OutcomeCounts {
        items,
        wins: Array2::zeros((n, n)),
    };
    for a in annotations {
        if a.item_a == a.item_b {
            return Err(Error::arg(format!("item {:?} compared with itself", a.item_a)));
        }
        let i = out.index_of(&a.item_a).unwrap();
        let j = out.index_of(&a.item_b).unwrap();
        match a.likert {
            4 | 5 => out.wins[[i, j]] += 1.0,
            1 | 2 => out.wins[[j, i]] += 1.0,
            3 => {
                if ties == TiePolicy::Half {
                    out.wins[[i, j]] += 0.5;
                    out.wins[[j, i]] += 0.5;
                }
            }
            other => return Err(Error::arg(format!("likert value {other} outside 1..=5"))),
        }
    }
    Ok(out)
}

/// `θ` per item, centered so the scores sum to zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BtScores {
    pub theta: BTreeMap<String, f64>,
    pub iterations: usize,
}

/// `e^θᵢ / (e^θᵢ + e^θⱼ)` as a logistic of the difference.
pub fn bt_prob(theta_i: f64, theta_j: f64) -> f64 {
    let d = theta_i - theta_j;
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

pub fn log_likelihood(wins: &Array2<f64>, theta: &[f64]) -> f64 {
    let n = theta.len();
    let mut ll = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = wins[[i, j]];
            if w > 0.0 {
                ll += w * bt_prob(theta[i], theta[j]).ln();
            }
        }
    }
    ll
}

fn reachable(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Rejects outcome sets whose maximum-likelihood estimate does not exist.
fn check_identifiable(outcomes: &OutcomeCounts) -> Result<()> {
    let n = outcomes.items.len();
    let w = &outcomes.wins;
    let undirected: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| w[[i, j]] + w[[j, i]] > 0.0).collect())
        .collect();
    let seen = reachable(&undirected, 0);
    let unreachable: Vec<String> = (0..n)
        .filter(|&i| !seen[i])
        .map(|i| outcomes.items[i].clone())
        .collect();
    if !unreachable.is_empty() {
        return Err(Error::Disconnected(unreachable));
    }
    for i in 0..n {
        let won: f64 = (0..n).map(|j| w[[i, j]]).sum();
        let lost: f64 = (0..n).map(|j| w[[j, i]]).sum();
        let reason = match (won > 0.0, lost > 0.0) {
            (true, true) => continue,
            (false, _) => "never wins a comparison",
            (true, false) => "never loses a comparison",
        };
        return Err(Error::DivergentItem {
            item: outcomes.items[i].clone(),
            reason: reason.into(),
        });
    }
    // an edge i -> j means i beat j at least once; the MLE is finite iff
    // every item can reach every other along such edges
    let beats: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| w[[i, j]] > 0.0).collect()).collect();
    let beaten_by: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| w[[j, i]] > 0.0).collect()).collect();
    let fwd = reachable(&beats, 0);
    let bwd = reachable(&beaten_by, 0);
    if let Some(i) = (0..n).find(|&i| !fwd[i] || !bwd[i]) {
        return Err(Error::DivergentItem {
            item: outcomes.items[i].clone(),
            reason: "belongs to a group that wins (or loses) every comparison with the rest".into(),
        });
    }
    Ok(())
}

pub fn bt_fit(outcomes: &OutcomeCounts, max_iter: usize, tol: f64) -> Result<BtScores> {
    bt_fit_traced(outcomes, max_iter, tol).map(|(s, _)| s)
}

/// Like [`bt_fit`], also returning the log-likelihood after every iteration.
pub fn bt_fit_traced(outcomes: &OutcomeCounts, max_iter: usize, tol: f64) -> Result<(BtScores, Vec<f64>)> {
    let n = outcomes.items.len();
    if n < 2 {
        return Err(Error::arg("at least two compared items are required"));
    }
    if max_iter == 0 || tol.is_nan() || tol <= 0.0 {
        return Err(Error::arg("max_iter must be positive and tol > 0"));
    }
    check_identifiable(outcomes)?;

    let w = &outcomes.wins;
    let total_wins: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w[[i, j]]).sum()).collect();
    let mut theta: Vec<f64> = vec![0.0; n];
    let mut trace = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;
        // π_i ← W_i / Σ_j n_ij / (π_i + π_j), in log space with π = e^θ
        let mut next: Vec<f64> = (0..n)
            .map(|i| {
                let denom: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| {
                        let games = w[[i, j]] + w[[j, i]];
                        if games == 0.0 {
                            0.0
                        } else {
                            // n_ij / (e^θi + e^θj) = n_ij · e^-θi · σ(θi - θj)
                            games * (-theta[i]).exp() * bt_prob(theta[i], theta[j])
                        }
                    })
                    .sum();
                total_wins[i].ln() - denom.ln()
            })
            .collect();
        let mean = next.iter().sum::<f64>() / n as f64;
        next.iter_mut().for_each(|t| *t -= mean);
        let delta = next
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta = next;
        trace.push(log_likelihood(w, &theta));
        if delta < tol {
            break;
        }
    }

    Ok((
        BtScores {
            theta: outcomes.items.iter().cloned().zip(theta).collect(),
            iterations,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn ann(a: &str, b: &str, likert: u8) -> PairwiseAnnotation {
        PairwiseAnnotation {
            item_a: a.into(),
            item_b: b.into(),
            likert,
        }
    }

    #[test]
    fn likert_conversion() {
        let o = likert_to_outcomes(&[ann("A", "B", 5)], TiePolicy::Half).unwrap();
        assert_eq!(o.wins_between("A", "B"), 1.0);
        assert_eq!(o.wins_between("B", "A"), 0.0);
        let t = likert_to_outcomes(&[ann("A", "B", 3)], TiePolicy::Half).unwrap();
        assert_eq!((t.wins_between("A", "B"), t.wins_between("B", "A")), (0.5, 0.5));
        let d = likert_to_outcomes(&[ann("A", "B", 3)], TiePolicy::Drop).unwrap();
        assert_eq!(d.wins.sum(), 0.0);
        assert!(likert_to_outcomes(&[ann("A", "B", 6)], TiePolicy::Half).is_err());
        assert!(likert_to_outcomes(&[ann("A", "A", 4)], TiePolicy::Half).is_err());
    }

    #[test]
    fn mixed_batch_tally() {
        let batch = [
            ann("x", "y", 1),
            ann("y", "z", 4),
            ann("x", "z", 3),
            ann("z", "x", 2),
            ann("y", "x", 5),
        ];
        let o = likert_to_outcomes(&batch, TiePolicy::Half).unwrap();
        // manual tally
        assert_eq!(o.wins_between("y", "x"), 2.0);
        assert_eq!(o.wins_between("y", "z"), 1.0);
        assert_eq!(o.wins_between("x", "z"), 1.5);
        assert_eq!(o.wins_between("z", "x"), 0.5);
        assert_eq!(o.wins.sum(), 5.0);
    }

    #[test]
    fn prob_identities() {
        assert_eq!(bt_prob(0.3, 0.3), 0.5);
        assert!((bt_prob(3f64.ln(), 0.0) - 0.75).abs() < 1e-15);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let a = rng.random_range(-50.0..50.0);
            let b = rng.random_range(-50.0..50.0);
            assert!((bt_prob(a, b) + bt_prob(b, a) - 1.0).abs() < 1e-15);
            let c = rng.random_range(-10.0..10.0);
            assert!((bt_prob(a, b) - bt_prob(a + c, b + c)).abs() < 1e-12);
        }
        assert_eq!(bt_prob(1000.0, -1000.0), 1.0);
        assert_eq!(bt_prob(-1000.0, 1000.0), 0.0);
    }

    #[test]
    fn two_item_closed_form() {
        let mut batch = vec![ann("A", "B", 5); 3];
        batch.push(ann("A", "B", 1));
        let o = likert_to_outcomes(&batch, TiePolicy::Half).unwrap();
        let s = bt_fit(&o, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert!((s.theta["A"] - s.theta["B"] - 3f64.ln()).abs() < 1e-6);
        assert!((s.theta["A"] - 0.549_306_144_334_054_8).abs() < 1e-6);
        assert!(s.theta.values().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn symmetric_three_items() {
        let batch = [
            ann("a", "b", 5),
            ann("b", "a", 5),
            ann("b", "c", 5),
            ann("c", "b", 5),
            ann("a", "c", 4),
            ann("c", "a", 4),
        ];
        let s = bt_fit(&likert_to_outcomes(&batch, TiePolicy::Half).unwrap(), 100, 1e-12).unwrap();
        assert!(s.theta.values().all(|t| t.abs() < 1e-12));
    }

    #[test]
    fn degenerate_inputs() {
        let disconnected = [ann("a", "b", 5), ann("b", "a", 5), ann("c", "d", 5), ann("d", "c", 5)];
        match bt_fit(&likert_to_outcomes(&disconnected, TiePolicy::Half).unwrap(), 100, 1e-9) {
            Err(Error::Disconnected(items)) => assert_eq!(items, ["c", "d"]),
            other => panic!("expected disconnected error, got {other:?}"),
        }
        let dominant = [ann("a", "b", 5), ann("a", "c", 5), ann("b", "c", 5), ann("c", "b", 5)];
        match bt_fit(&likert_to_outcomes(&dominant, TiePolicy::Half).unwrap(), 100, 1e-9) {
            Err(Error::DivergentItem { item, .. }) => assert_eq!(item, "a"),
            other => panic!("expected divergent item, got {other:?}"),
        }
        // every item wins and loses, but {a, b} sweeps {c, d}
        let split = [
            ann("a", "b", 5), ann("b", "a", 5), ann("c", "d", 5), ann("d", "c", 5),
            ann("a", "c", 5), ann("b", "d", 5),
        ];
        assert!(matches!(
            bt_fit(&likert_to_outcomes(&split, TiePolicy::Half).unwrap(), 100, 1e-9),
            Err(Error::DivergentItem { .. })
        ));
    }

    #[test]
    fn likelihood_non_decreasing() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let truth: Vec<f64> = (0..6).map(|_| rng.random_range(-1.5..1.5)).collect();
        let names: Vec<String> = (0..6).map(|i| format!("s{i}")).collect();
        let mut batch = Vec::new();
        for i in 0..6 {
            for j in i + 1..6 {
                for _ in 0..15 {
                    let likert = if rng.random::<f64>() < bt_prob(truth[i], truth[j]) { 5 } else { 1 };
                    batch.push(ann(&names[i], &names[j], likert));
                }
            }
        }
        let o = likert_to_outcomes(&batch, TiePolicy::Half).unwrap();
        let (_, trace) = bt_fit_traced(&o, 500, 1e-12).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn annotation_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.jsonl");
        std::fs::write(&p, "{\"a\":\"x\",\"b\":\"y\",\"likert\":4}\n").unwrap();
        assert_eq!(read_annotations(&p).unwrap(), [ann("x", "y", 4)]);
        std::fs::write(&p, "{\"a\":\"x\",\"b\":\"y\",\"likert\":4}\n{\"a\":\"x\",\"b\":\"y\",\"likert\":0}\n").unwrap();
        assert!(matches!(read_annotations(&p), Err(Error::Parse { line: 2, .. })));
    }
}
