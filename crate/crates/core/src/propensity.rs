//! Propensity estimation `P(T | X, I)` and overlap auditing.
//!
//! Two model kinds are provided: an exact cell table over discretized strata
//! and an L2-penalized logistic regression fitted by Newton's method.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use smallvec::SmallVec;

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_CLIP: f64 = 0.01;
pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_RIDGE: f64 = 1e-6;

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 40;

/// Values used verbatim are keyed on a grid of this resolution, so that
/// values differing only by floating-point rounding share a stratum.
const VERBATIM_RESOLUTION: f64 = 1e9;

/// Identifies a stratum: one entry per feature column.
pub type StratumKey = SmallVec<[i64; 4]>;

/// Renders a stratum key for reports.
type Labeler<'a> = Box<dyn Fn(&StratumKey) -> String + 'a>;

/// Which covariate and signature columns an adjustment conditions on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureSet {
    pub x_cols: Vec<String>,
    pub i_cols: Vec<String>,
}

impl FeatureSet {
    pub fn new(x_cols: Vec<String>, i_cols: Vec<String>) -> Self {
        FeatureSet { x_cols, i_cols }
    }

    pub fn none() -> Self {
        FeatureSet::default()
    }

    pub fn columns(&self) -> Vec<String> {
        self.x_cols.iter().chain(&self.i_cols).cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.x_cols.is_empty() && self.i_cols.is_empty()
    }

    pub fn adjustment(&self) -> Adjustment {
        if !self.i_cols.is_empty() {
            Adjustment::XAndI
        } else if !self.x_cols.is_empty() {
            Adjustment::XOnly
        } else {
            Adjustment::None
        }
    }

    /// Resolves the feature columns, which must be covariates or signatures.
    pub fn resolve<'a>(&self, dataset: &'a Dataset) -> Result<Vec<&'a [f64]>> {
        self.columns()
            .iter()
            .map(|name| {
                dataset
                    .covariate(name)
                    .or_else(|| dataset.signature(name))
                    .ok_or_else(|| Error::Schema(format!("no covariate or signature column named {name}")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjustment {
    None,
    XOnly,
    XAndI,
}

impl fmt::Display for Adjustment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Adjustment::None => "none",
            Adjustment::XOnly => "x_only",
            Adjustment::XAndI => "x_and_i",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum BinRule {
    Verbatim,
    /// Sorted interior edges; bin = number of edges `<= v`.
    Quantile(Vec<f64>),
}

/// Maps feature values to stratum keys.
///
/// A column with at most `bins` distinct values is used verbatim; otherwise
/// it is cut into `bins` equal-frequency bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretizer {
    names: Vec<String>,
    rules: Vec<BinRule>,
}

fn quantize(v: f64) -> i64 {
    (v * VERBATIM_RESOLUTION).round() as i64
}

impl Discretizer {
    pub fn fit(dataset: &Dataset, features: &FeatureSet, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidInput("bins must be >= 1".into()));
        }
        let cols = features.resolve(dataset)?;
        let rules = cols
            .iter()
            .map(|col| {
                let mut q: Vec<i64> = col.iter().map(|&v| quantize(v)).collect();
                q.sort_unstable();
                q.dedup();
                if q.len() <= bins {
                    BinRule::Verbatim
                } else {
                    let mut sorted = col.to_vec();
                    sorted.sort_by(f64::total_cmp);
                    let n = sorted.len();
                    let mut edges: Vec<f64> = (1..bins).map(|k| sorted[k * n / bins]).collect();
                    edges.dedup();
                    BinRule::Quantile(edges)
                }
            })
            .collect();
        Ok(Discretizer {
            names: features.columns(),
            rules,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn key(&self, values: &[f64]) -> StratumKey {
        self.rules
            .iter()
            .zip(values)
            .map(|(rule, &v)| match rule {
                BinRule::Verbatim => quantize(v),
                BinRule::Quantile(edges) => edges.partition_point(|&e| e <= v) as i64,
            })
            .collect()
    }

    /// Stratum key of every unit.
    pub fn keys(&self, dataset: &Dataset) -> Result<Vec<StratumKey>> {
        let cols: Vec<&[f64]> = self
            .names
            .iter()
            .map(|n| {
                dataset
                    .covariate(n)
                    .or_else(|| dataset.signature(n))
                    .ok_or_else(|| Error::Schema(format!("no covariate or signature column named {n}")))
            })
            .collect::<Result<_>>()?;
        let mut buf = Vec::with_capacity(cols.len());
        Ok((0..dataset.len())
            .map(|i| {
                buf.clear();
                buf.extend(cols.iter().map(|c| c[i]));
                self.key(&buf)
            })
            .collect())
    }

    /// Human-readable label, e.g. `x_1=0.1, i_ctx=bin 3`.
    pub fn describe(&self, key: &StratumKey) -> String {
        if key.is_empty() {
            return "(all units)".into();
        }
        let parts: Vec<String> = self
            .names
            .iter()
            .zip(&self.rules)
            .zip(key)
            .map(|((name, rule), &k)| match rule {
                BinRule::Verbatim => format!("{name}={}", k as f64 / VERBATIM_RESOLUTION),
                BinRule::Quantile(_) => format!("{name}=bin {k}"),
            })
            .collect();
        format!("({})", parts.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellCount {
    pub n_treated: usize,
    pub n_total: usize,
}

impl CellCount {
    pub fn fraction(&self) -> f64 {
        self.n_treated as f64 / self.n_total as f64
    }

    pub fn is_one_armed(&self) -> bool {
        self.n_treated == 0 || self.n_treated == self.n_total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Cell {
        discretizer: Discretizer,
        cells: HashMap<StratumKey, CellCount>,
    },
    /// Intercept first, then one coefficient per feature.
    Logistic { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropensityModel {
    features: FeatureSet,
    kind: ModelKind,
    clip: Option<f64>,
}

fn check_clip(clip: Option<f64>) -> Result<()> {
    match clip {
        Some(e) if !(e > 0.0 && e < 0.5) => {
            Err(Error::InvalidInput(format!("clip must lie in (0, 0.5), got {e}")))
        }
        _ => Ok(()),
    }
}

/// Counts treated and total units per stratum.
pub fn count_cells(t: &[u8], keys: &[StratumKey]) -> HashMap<StratumKey, CellCount> {
    let mut cells: HashMap<StratumKey, CellCount> = HashMap::new();
    for (k, &ti) in keys.iter().zip(t) {
        let c = cells.entry(k.clone()).or_default();
        c.n_treated += ti as usize;
        c.n_total += 1;
    }
    cells
}

/// Fits an exact cell-frequency model over the strata of `x_cols` and `i_cols`.
pub fn fit_cell(dataset: &Dataset, features: &FeatureSet, bins: usize) -> Result<PropensityModel> {
    if features.is_empty() {
        return Err(Error::InvalidInput("fit_cell needs at least one feature column".into()));
    }
    let discretizer = Discretizer::fit(dataset, features, bins)?;
    fit_cell_with(dataset, features, discretizer)
}

/// Fits a cell model using a pre-computed discretizer, so that a model refit
/// on a subset keeps the strata of the full data.
pub fn fit_cell_with(
    dataset: &Dataset,
    features: &FeatureSet,
    discretizer: Discretizer,
) -> Result<PropensityModel> {
    if discretizer.names() != features.columns().as_slice() {
        return Err(Error::InvalidInput("discretizer does not match the feature set".into()));
    }
    let keys = discretizer.keys(dataset)?;
    let cells = count_cells(dataset.t(), &keys);
    Ok(PropensityModel {
        features: features.clone(),
        kind: ModelKind::Cell { discretizer, cells },
        clip: Some(DEFAULT_CLIP),
    })
}

/// Marginal model `P(T)`: a single stratum holding every unit.
pub fn fit_marginal(dataset: &Dataset) -> Result<PropensityModel> {
    let features = FeatureSet::none();
    let discretizer = Discretizer::fit(dataset, &features, 1)?;
    fit_cell_with(dataset, &features, discretizer)
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn penalized_loglik(z: &DMatrix<f64>, t: &DVector<f64>, beta: &DVector<f64>, ridge: f64) -> f64 {
    let eta = z * beta;
    let ll: f64 = eta.iter().zip(t.iter()).map(|(&e, &ti)| ti * e - softplus(e)).sum();
    let pen: f64 = beta.iter().skip(1).map(|b| b * b).sum();
    ll - 0.5 * ridge * pen
}

/// Fits `logit P(T=1) = b0 + b . features` by penalized maximum likelihood.
///
/// Newton iterations with step halving whenever the penalized
/// log-likelihood would decrease; converged once the largest coefficient
/// update falls below 1e-8.
pub fn fit_logistic(dataset: &Dataset, features: &FeatureSet, ridge: f64) -> Result<PropensityModel> {
    if features.is_empty() {
        return Err(Error::InvalidInput("fit_logistic needs at least one feature column".into()));
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::InvalidInput(format!("ridge must be finite and >= 0, got {ridge}")));
    }
    let cols = features.resolve(dataset)?;
    let n = dataset.len();
    let treated = dataset.n_treated();
    if treated == 0 || treated == n {
        return Err(Error::Overlap(format!(
            "logistic propensity needs both arms; {treated} of {n} units are treated"
        )));
    }
    let p = cols.len() + 1;
    let z = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] });
    let t = DVector::from_iterator(n, dataset.t().iter().map(|&v| v as f64));
    let mut penalty = DMatrix::identity(p, p) * ridge;
    penalty[(0, 0)] = 0.0;

    let mut beta = DVector::zeros(p);
    let mut ll = penalized_loglik(&z, &t, &beta, ridge);
    for _ in 0..NEWTON_MAX_ITER {
        let prob = (&z * &beta).map(sigmoid);
        let w = prob.map(|q| q * (1.0 - q));
        let mut grad = z.transpose() * (&t - &prob);
        for j in 1..p {
            grad[j] -= ridge * beta[j];
        }
        let zw = DMatrix::from_fn(n, p, |i, j| z[(i, j)] * w[i]);
        let info = z.transpose() * zw + &penalty;
        let Some(chol) = info.cholesky() else {
            return Err(Error::NonConvergence {
                iterations: NEWTON_MAX_ITER,
            });
        };
        let mut step = chol.solve(&grad);
        let mut candidate = &beta + &step;
        let mut cand_ll = penalized_loglik(&z, &t, &candidate, ridge);
        let mut halvings = 0;
        while !(cand_ll >= ll) && halvings < MAX_HALVINGS {
            step *= 0.5;
            candidate = &beta + &step;
            cand_ll = penalized_loglik(&z, &t, &candidate, ridge);
            halvings += 1;
        }
        if !candidate.iter().all(|b| b.is_finite()) {
            break;
        }
        beta = candidate;
        if cand_ll >= ll {
            ll = cand_ll;
        }
        if step.amax() < NEWTON_TOL {
            return Ok(PropensityModel {
                features: features.clone(),
                kind: ModelKind::Logistic {
                    coefficients: beta.iter().copied().collect(),
                },
                clip: Some(DEFAULT_CLIP),
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: NEWTON_MAX_ITER,
    })
}

/// Builds a logistic model from known coefficients.
pub fn logistic_from_coefficients(features: &FeatureSet, coefficients: Vec<f64>) -> Result<PropensityModel> {
    if coefficients.len() != features.columns().len() + 1 {
        return Err(Error::InvalidInput(
            "need one intercept plus one coefficient per feature".into(),
        ));
    }
    if !coefficients.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidInput("coefficients must be finite".into()));
    }
    Ok(PropensityModel {
        features: features.clone(),
        kind: ModelKind::Logistic { coefficients },
        clip: Some(DEFAULT_CLIP),
    })
}

impl PropensityModel {
    /// Sets the clipping bound `eps`; `None` disables clipping.
    pub fn with_clip(mut self, clip: Option<f64>) -> Result<Self> {
        check_clip(clip)?;
        self.clip = clip;
        Ok(self)
    }

    pub fn clip(&self) -> Option<f64> {
        self.clip
    }

    pub fn features(&self) -> &FeatureSet {
        &self.features
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn is_cell(&self) -> bool {
        matches!(self.kind, ModelKind::Cell { .. })
    }

    pub fn adjustment(&self) -> Adjustment {
        self.features.adjustment()
    }

    fn apply_clip(&self, p: f64) -> f64 {
        match self.clip {
            Some(e) => p.clamp(e, 1.0 - e),
            None => p,
        }
    }

    /// Unclipped probability for feature values given in `features()` order.
    pub fn predict_raw(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.features.columns().len() {
            return Err(Error::InvalidInput(format!(
                "model expects {} feature values, got {}",
                self.features.columns().len(),
                values.len()
            )));
        }
        match &self.kind {
            ModelKind::Cell { discretizer, cells } => {
                let key = discretizer.key(values);
                cells
                    .get(&key)
                    .map(CellCount::fraction)
                    .ok_or_else(|| Error::UnseenStratum(discretizer.describe(&key)))
            }
            ModelKind::Logistic { coefficients } => {
                let eta = coefficients[0]
                    + coefficients[1..].iter().zip(values).map(|(b, v)| b * v).sum::<f64>();
                Ok(sigmoid(eta))
            }
        }
    }

    /// Probability in `[eps, 1 - eps]` for feature values in `features()` order.
    pub fn predict(&self, values: &[f64]) -> Result<f64> {
        Ok(self.apply_clip(self.predict_raw(values)?))
    }

    /// Clipped probability for row `i` of `dataset`.
    pub fn predict_unit(&self, dataset: &Dataset, i: usize) -> Result<f64> {
        let cols = self.features.resolve(dataset)?;
        let values: Vec<f64> = cols.iter().map(|c| c[i]).collect();
        self.predict(&values)
    }

    /// Unclipped probabilities for every unit.
    pub fn predict_all_raw(&self, dataset: &Dataset) -> Result<Vec<f64>> {
        match &self.kind {
            ModelKind::Cell { discretizer, cells } => discretizer
                .keys(dataset)?
                .iter()
                .map(|k| {
                    cells
                        .get(k)
                        .map(CellCount::fraction)
                        .ok_or_else(|| Error::UnseenStratum(discretizer.describe(k)))
                })
                .collect(),
            ModelKind::Logistic { .. } => {
                let cols = self.features.resolve(dataset)?;
                let mut buf = Vec::with_capacity(cols.len());
                (0..dataset.len())
                    .map(|i| {
                        buf.clear();
                        buf.extend(cols.iter().map(|c| c[i]));
                        self.predict_raw(&buf)
                    })
                    .collect()
            }
        }
    }

    /// Clipped probabilities for every unit.
    pub fn predict_all(&self, dataset: &Dataset) -> Result<Vec<f64>> {
        Ok(self
            .predict_all_raw(dataset)?
            .into_iter()
            .map(|p| self.apply_clip(p))
            .collect())
    }

    /// Stratum of every unit as used by [`overlap_report`]: cell keys for a
    /// cell model, predicted-probability deciles for a logistic model.
    fn audit_strata(&self, dataset: &Dataset) -> Result<(Vec<StratumKey>, Labeler<'_>)> {
        match &self.kind {
            ModelKind::Cell { discretizer, .. } => {
                Ok((discretizer.keys(dataset)?, Box::new(move |k| discretizer.describe(k))))
            }
            ModelKind::Logistic { .. } => {
                let keys = self
                    .predict_all_raw(dataset)?
                    .into_iter()
                    .map(|p| {
                        let mut k = StratumKey::new();
                        k.push(((p * 10.0).floor() as i64).clamp(0, 9));
                        k
                    })
                    .collect();
                Ok((
                    keys,
                    Box::new(|k: &StratumKey| {
                        format!("(p in [{:.1}, {:.1}))", k[0] as f64 / 10.0, (k[0] + 1) as f64 / 10.0)
                    }),
                ))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StratumSummary {
    pub stratum: String,
    pub n_treated: usize,
    pub n_total: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OverlapReport {
    pub strata: Vec<StratumSummary>,
    pub violations: Vec<StratumSummary>,
    pub trimmed_fraction: f64,
    /// Per unit of the audited dataset: does it sit in a violating stratum?
    #[serde(skip)]
    pub violating_units: Vec<bool>,
}

impl OverlapReport {
    pub fn n_violating_units(&self) -> usize {
        self.violating_units.iter().filter(|&&v| v).count()
    }
}

/// Counts treated and untreated units per stratum of `dataset` and flags
/// strata where one arm is empty.
pub fn overlap_report(model: &PropensityModel, dataset: &Dataset) -> Result<OverlapReport> {
    let (keys, describe) = model.audit_strata(dataset)?;
    let mut counts: BTreeMap<StratumKey, CellCount> = BTreeMap::new();
    for (k, &t) in keys.iter().zip(dataset.t()) {
        let c = counts.entry(k.clone()).or_default();
        c.n_treated += t as usize;
        c.n_total += 1;
    }
    let summarize = |k: &StratumKey, c: &CellCount| StratumSummary {
        stratum: describe(k),
        n_treated: c.n_treated,
        n_total: c.n_total,
    };
    let strata: Vec<_> = counts.iter().map(|(k, c)| summarize(k, c)).collect();
    let violations: Vec<_> = counts
        .iter()
        .filter(|(_, c)| c.is_one_armed())
        .map(|(k, c)| summarize(k, c))
        .collect();
    let violating_units: Vec<bool> = keys.iter().map(|k| counts[k].is_one_armed()).collect();
    let n_bad = violating_units.iter().filter(|&&v| v).count();
    Ok(OverlapReport {
        strata,
        violations,
        trimmed_fraction: n_bad as f64 / dataset.len() as f64,
        violating_units,
    })
}

/// Removes every unit of a violating stratum.
pub fn trim(dataset: &Dataset, report: &OverlapReport) -> Result<Dataset> {
    if report.violating_units.len() != dataset.len() {
        return Err(Error::InvalidInput(
            "overlap report was produced from a different dataset".into(),
        ));
    }
    if report.violating_units.iter().all(|&v| v) {
        return Err(Error::Overlap(
            "every stratum violates overlap; trimming would leave no units".into(),
        ));
    }
    if report.violations.is_empty() {
        return Ok(dataset.clone());
    }
    let keep: Vec<bool> = report.violating_units.iter().map(|&v| !v).collect();
    dataset.filter(&keep)
}
