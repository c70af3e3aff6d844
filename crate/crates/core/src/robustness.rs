//! Stability of Sem-Ent rankings across cluster counts.
//!
//! Several systems' generations are scored with clusters fit at each `k` in
//! a grid; the Spearman correlation between the per-`k` score vectors shows
//! whether the ranking of systems depends on the choice of `k`.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{kmeans_fit, KMeansConfig};
use crate::correlation::spearman;
use crate::error::{Error, Result};
use crate::sement::sem_ent;

pub const DEFAULT_K_GRID: [usize; 4] = [10, 20, 50, 100];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub ks: Vec<usize>,
    pub systems: Vec<String>,
    /// `sem_ent[a][s]`: Sem-Ent of system `s` with `ks[a]` clusters.
    pub sem_ent: Vec<Vec<f64>>,
    /// Spearman correlation between the score vectors of `ks[a]` and `ks[b]`.
    /// The diagonal is 1; off-diagonal entries are `None` when the
    /// correlation is undefined (fewer than three systems, or constant scores).
    pub spearman: Vec<Vec<Option<f64>>>,
    /// Mean over the defined off-diagonal pairs `a < b`.
    pub mean_pairwise_spearman: Option<f64>,
}

pub fn sement_across_ks(
    train: ArrayView2<'_, f64>,
    systems: &[(String, Array2<f64>)],
    ks: &[usize],
    base: &KMeansConfig,
) -> Result<RobustnessReport> {
    if ks.is_empty() {
        return Err(Error::arg("need at least one value of k"));
    }
    if systems.is_empty() {
        return Err(Error::arg("need at least one system"));
    }
    for (name, x) in systems {
        if x.ncols() != train.ncols() {
            return Err(Error::arg(format!(
                "system {name:?} has {} dims, training embeddings have {}",
                x.ncols(),
                train.ncols()
            )));
        }
    }

    let scores: Vec<Vec<f64>> = ks
        .par_iter()
        .map(|&k| -> Result<Vec<f64>> {
            let model = kmeans_fit(train, &KMeansConfig { k, ..*base })?;
            systems
                .iter()
                .map(|(_, x)| Ok(sem_ent(&model.assign(x.view())?.distribution()?).value))
                .collect()
        })
        .collect::<Result<_>>()?;

    let m = ks.len();
    let mut matrix = vec![vec![None; m]; m];
    let mut off_diag = Vec::new();
    for a in 0..m {
        matrix[a][a] = Some(1.0);
        for b in a + 1..m {
            let rho = match spearman(&scores[a], &scores[b]) {
                Ok(r) => Some(r.coefficient),
                Err(Error::UndefinedCorrelation(_)) => None,
                Err(e) => return Err(e),
            };
            matrix[a][b] = rho;
            matrix[b][a] = rho;
            off_diag.extend(rho);
        }
    }
    let mean = (!off_diag.is_empty()).then(|| off_diag.iter().sum::<f64>() / off_diag.len() as f64);
    Ok(RobustnessReport {
        ks: ks.to_vec(),
        systems: systems.iter().map(|(n, _)| n.clone()).collect(),
        sem_ent: scores,
        spearman: matrix,
        mean_pairwise_spearman: mean,
    })
}
