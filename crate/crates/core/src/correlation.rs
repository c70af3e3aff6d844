//! Pearson and Spearman correlation with two-sided t-test p-values.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub coefficient: f64,
    pub p_value: f64,
    pub n: usize,
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Alignment {
            what: "second sample",
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 3 paired samples, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::UndefinedCorrelation("non-finite sample".into()));
    }
    Ok(())
}

fn pearson_coefficient(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided p-value of `t = r √((n-2)/(1-r²))` under Student-t with `n - 2`
/// degrees of freedom.
pub fn t_test_p_value(r: f64, n: usize) -> f64 {
    let one_minus = 1.0 - r * r;
    if one_minus <= 0.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / one_minus).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    check_inputs(x, y)?;
    let r = pearson_coefficient(x, y)?;
    Ok(CorrelationResult {
        coefficient: r,
        p_value: t_test_p_value(r, x.len()),
        n: x.len(),
    })
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn fractional_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    check_inputs(x, y)?;
    pearson(&fractional_ranks(x), &fractional_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientWithP {
    pub r: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankCoefficientWithP {
    pub rho: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub pearson: CoefficientWithP,
    pub spearman: RankCoefficientWithP,
    pub n: usize,
}

/// Correlates two score maps over their shared keys. Both maps must carry
/// exactly the same keys.
pub fn correlate_maps(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Result<CorrelationReport> {
    let missing: Vec<&str> = a
        .keys()
        .filter(|k| !b.contains_key(*k))
        .chain(b.keys().filter(|k| !a.contains_key(*k)))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(Error::arg(format!("keys present in only one input: {missing:?}")));
    }
    let x: Vec<f64> = a.values().copied().collect();
    let y: Vec<f64> = a.keys().map(|k| b[k]).collect();
    let p = pearson(&x, &y)?;
    let s = spearman(&x, &y)?;
    Ok(CorrelationReport {
        pearson: CoefficientWithP { r: p.coefficient, p: p.p_value },
        spearman: RankCoefficientWithP { rho: s.coefficient, p: s.p_value },
        n: x.len(),
    })
}
