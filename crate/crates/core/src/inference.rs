//! Bootstrap percentile intervals and interference-aware variance inflation.
//!
//! The dependence indicator `D_ij` marks unit pairs that share a common
//! neighbor in the adjacency relation (self-loops included), so that
//! `D = (A^T A > 0)`. Summaries of `D` (row-sum average, maximum, spectral
//! radius) serve as variance inflation factors for bootstrap intervals.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::{AdjacencyGraph, Dataset};
use crate::error::{Error, Result};
use crate::estimators::{Estimand, EstimatorSpec};
use crate::rng::{purpose, Stream};

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;
pub const MIN_REPLICATES: usize = 100;
/// Largest tolerated share of failing bootstrap replicates.
pub const MAX_FAILURE_RATE: f64 = 0.05;

/// Binary dependence matrix `D_ij = 1` iff `A_ki A_kj = 1` for some `k`.
///
/// The graph's diagonal is used as given; with the usual convention
/// (`self_loops = true`) adjacent units and units sharing a neighbor are
/// dependent and `D_ii = 1`.
pub fn dependence_matrix(graph: &AdjacencyGraph) -> DMatrix<u8> {
    let n = graph.n();
    if !graph.self_loops() {
        log::warn!("dependence_matrix: graph has no self-loops; D_ii may be 0");
    }
    let mut d = DMatrix::zeros(n, n);
    let mut closed = Vec::new();
    for k in 0..n {
        closed.clear();
        if graph.self_loops() {
            closed.push(k);
        }
        closed.extend_from_slice(graph.neighbors(k));
        for &i in &closed {
            for &j in &closed {
                d[(i, j)] = 1;
            }
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DependenceSummary {
    pub d_per_unit: Vec<usize>,
    pub d_avg: f64,
    pub d_max: usize,
    pub d_sr: f64,
    pub power_iterations: usize,
}

/// Dominant eigenvalue of a symmetric nonnegative matrix by power iteration
/// from the all-ones vector. Stops when the Rayleigh quotient changes by
/// less than `tol`. Returns the eigenvalue and the iteration count.
pub fn power_iteration(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<(f64, usize)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((0.0, 0));
    }
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = f64::NAN;
    for it in 1..=max_iter {
        let w = m * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok((0.0, it));
        }
        if (next - lambda).abs() < tol {
            return Ok((next, it));
        }
        lambda = next;
        v = w / norm;
    }
    Err(Error::PowerIteration { iterations: max_iter })
}

pub fn dependence_summary(graph: &AdjacencyGraph) -> Result<DependenceSummary> {
    let d = dependence_matrix(graph);
    let d_per_unit: Vec<usize> = d.row_iter().map(|r| r.iter().map(|&v| v as usize).sum()).collect();
    let n = d_per_unit.len();
    let d_avg = d_per_unit.iter().sum::<usize>() as f64 / n as f64;
    let d_max = d_per_unit.iter().copied().max().unwrap_or(0);
    let (d_sr, power_iterations) = power_iteration(&d.map(f64::from), POWER_TOL, POWER_MAX_ITER)?;
    Ok(DependenceSummary {
        d_per_unit,
        d_avg,
        d_max,
        d_sr,
        power_iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InflationMethod {
    Avg,
    Max,
    Sr,
}

impl InflationMethod {
    pub fn factor(&self, summary: &DependenceSummary) -> f64 {
        match self {
            InflationMethod::Avg => summary.d_avg,
            InflationMethod::Max => summary.d_max as f64,
            InflationMethod::Sr => summary.d_sr,
        }
    }
}

impl fmt::Display for InflationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InflationMethod::Avg => "avg",
            InflationMethod::Max => "max",
            InflationMethod::Sr => "sr",
        })
    }
}

impl FromStr for InflationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg" => Ok(InflationMethod::Avg),
            "max" => Ok(InflationMethod::Max),
            "sr" => Ok(InflationMethod::Sr),
            _ => Err(Error::InvalidInput(format!("unknown inflation method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IntervalReport {
    pub estimand: Estimand,
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub lo_inflated: f64,
    pub hi_inflated: f64,
    pub inflation_factor: f64,
    /// `None` until [`inflate`] is applied. Inflation scales the interval
    /// half-width by `sqrt(inflation_factor)` about its midpoint.
    pub inflation_method: Option<InflationMethod>,
    pub replicates: usize,
    pub failed_replicates: usize,
    pub seed: u64,
}

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn cluster_members(dataset: &Dataset, col: &str) -> Result<Vec<Vec<usize>>> {
    let labels: Vec<u64> = if col == "context" {
        dataset
            .context()
            .ok_or_else(|| Error::Schema("no context column to cluster on".into()))?
            .iter()
            .map(|&c| c as u64)
            .collect()
    } else {
        dataset.require_column(col)?.iter().map(|v| v.to_bits()).collect()
    };
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, l) in labels.into_iter().enumerate() {
        let k = *index.entry(l).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[k].push(i);
    }
    Ok(members)
}

/// Percentile bootstrap of `spec` on `dataset`.
///
/// Replicate `r` draws its resample from the stream
/// `(seed, BOOTSTRAP, r)` (see [`crate::rng`]), so results do not depend on
/// scheduling. With `cluster_col`, whole clusters are drawn with
/// replacement. Strata for cell and stratified estimators are fixed from the
/// full sample. Replicates where the estimator fails are dropped unless they
/// exceed 5% of the total.
pub fn bootstrap(
    dataset: &Dataset,
    spec: &EstimatorSpec,
    replicates: usize,
    seed: u64,
    cluster_col: Option<&str>,
) -> Result<IntervalReport> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidInput(format!(
            "bootstrap needs at least {MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    let point = spec.evaluate(dataset)?.point;
    let prepared = spec.prepare(dataset)?;
    let clusters = cluster_col.map(|c| cluster_members(dataset, c)).transpose()?;
    let n = dataset.len();

    let draw = |r: usize| -> Vec<usize> {
        let mut s = Stream::new(seed, purpose::BOOTSTRAP, r as u64);
        match &clusters {
            None => (0..n).map(|_| s.below(n)).collect(),
            Some(cl) => {
                let mut idx = Vec::with_capacity(n);
                for _ in 0..cl.len() {
                    idx.extend_from_slice(&cl[s.below(cl.len())]);
                }
                idx
            }
        }
    };

    let results: Vec<Result<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let idx = draw(r);
            match &prepared.strata {
                Some(strata) => {
                    let y: Vec<f64> = idx.iter().map(|&i| dataset.y()[i]).collect();
                    let t: Vec<u8> = idx.iter().map(|&i| dataset.t()[i]).collect();
                    let ids: Vec<u32> = idx.iter().map(|&i| strata.ids[i]).collect();
                    spec.evaluate_strata(&y, &t, &ids, &strata.labels).map(|e| e.point)
                }
                None => spec.evaluate(&dataset.take(&idx)?).map(|e| e.point),
            }
        })
        .collect();

    let mut values = Vec::with_capacity(replicates);
    let mut failed = 0;
    let mut first_failure = None;
    for r in results {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                failed += 1;
                first_failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if failed as f64 > MAX_FAILURE_RATE * replicates as f64 {
        return Err(Error::Bootstrap {
            failed,
            total: replicates,
            reason: first_failure.unwrap_or_default(),
        });
    }
    if failed > 0 {
        log::warn!("bootstrap: dropped {failed} of {replicates} failing replicates");
    }
    values.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&values, 0.025);
    let hi = quantile_sorted(&values, 0.975);
    Ok(IntervalReport {
        estimand: spec.estimand,
        point,
        lo,
        hi,
        lo_inflated: lo,
        hi_inflated: hi,
        inflation_factor: 1.0,
        inflation_method: None,
        replicates,
        failed_replicates: failed,
        seed,
    })
}

/// Widens `[lo, hi]` about its midpoint by `sqrt(factor)`.
pub fn inflate(report: &IntervalReport, summary: &DependenceSummary, method: InflationMethod) -> Result<IntervalReport> {
    let factor = method.factor(summary);
    if !(factor >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "inflation factor {factor} < 1; the graph must carry self-loops (A_ii = 1)"
        )));
    }
    let mid = 0.5 * (report.lo + report.hi);
    let half = 0.5 * (report.hi - report.lo) * factor.sqrt();
    Ok(IntervalReport {
        lo_inflated: mid - half,
        hi_inflated: mid + half,
        inflation_factor: factor,
        inflation_method: Some(method),
        ..report.clone()
    })
}
