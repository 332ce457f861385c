//! Causal effect estimators: IPW and stratified TACE, the naive difference
//! in means, and the stratified risk ratio (TACRR).
//!
//! Every estimator takes its adjustment set explicitly. One-armed strata are
//! errors unless the caller asks for trimming, in which case they are
//! removed and the removed share is reported.

use std::collections::BTreeMap;
use std::fmt;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::propensity::{
    self, fit_logistic, fit_marginal, Adjustment, Discretizer, FeatureSet, PropensityModel, StratumKey,
    DEFAULT_BINS, DEFAULT_CLIP, DEFAULT_RIDGE,
};
use crate::sum::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    Tace,
    Tacrr,
    NaiveDiff,
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimand::Tace => "tace",
            Estimand::Tacrr => "tacrr",
            Estimand::NaiveDiff => "naive_diff",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct Diagnostics {
    /// Strata used by a cell propensity or stratified estimator.
    pub n_strata: Option<usize>,
    pub n_violating_strata: usize,
    /// Units whose propensity was moved by clipping.
    pub n_clipped: usize,
    pub n_trimmed: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EstimateReport {
    pub estimand: Estimand,
    pub point: f64,
    pub n_used: usize,
    pub trimmed_fraction: f64,
    pub adjustment: Adjustment,
    pub diagnostics: Diagnostics,
}

/// Inverse-propensity-weighted TACE (unnormalized Horvitz-Thompson form):
/// `(1/n) sum [ t y / p - (1 - t) y / (1 - p) ]`.
pub fn ipw_tace(dataset: &Dataset, model: &PropensityModel) -> Result<EstimateReport> {
    let raw = model.predict_all_raw(dataset)?;
    let mut n_clipped = 0;
    let probs: Vec<f64> = match model.clip() {
        None => {
            if let Some(i) = raw.iter().position(|&p| !(p > 0.0 && p < 1.0)) {
                return Err(Error::Overlap(format!(
                    "unit {} has propensity {} with clipping disabled",
                    dataset.unit_ids()[i],
                    raw[i]
                )));
            }
            raw
        }
        Some(e) => raw
            .into_iter()
            .map(|p| {
                let c = p.clamp(e, 1.0 - e);
                n_clipped += (c != p) as usize;
                c
            })
            .collect(),
    };
    let n = dataset.len();
    let mut acc = KahanSum::default();
    for ((&y, &t), &p) in dataset.y().iter().zip(dataset.t()).zip(&probs) {
        acc.add(if t == 1 { y / p } else { -y / (1.0 - p) });
    }
    let (n_strata, n_violating_strata) = match model.kind() {
        propensity::ModelKind::Cell { cells, .. } => {
            (Some(cells.len()), cells.values().filter(|c| c.is_one_armed()).count())
        }
        _ => (None, 0),
    };
    Ok(EstimateReport {
        estimand: Estimand::Tace,
        point: acc.value() / n as f64,
        n_used: n,
        trimmed_fraction: 0.0,
        adjustment: model.adjustment(),
        diagnostics: Diagnostics {
            n_strata,
            n_violating_strata,
            n_clipped,
            ..Diagnostics::default()
        },
    })
}

pub fn naive_difference(dataset: &Dataset) -> Result<EstimateReport> {
    let (mut s1, mut s0) = (KahanSum::default(), KahanSum::default());
    let (mut n1, mut n0) = (0usize, 0usize);
    for (&y, &t) in dataset.y().iter().zip(dataset.t()) {
        if t == 1 {
            s1.add(y);
            n1 += 1;
        } else {
            s0.add(y);
            n0 += 1;
        }
    }
    if n1 == 0 || n0 == 0 {
        return Err(Error::Overlap(
            "naive difference needs both treated and untreated units".into(),
        ));
    }
    Ok(EstimateReport {
        estimand: Estimand::NaiveDiff,
        point: s1.value() / n1 as f64 - s0.value() / n0 as f64,
        n_used: dataset.len(),
        trimmed_fraction: 0.0,
        adjustment: Adjustment::None,
        diagnostics: Diagnostics::default(),
    })
}

/// Units grouped into dense stratum ids `0..labels.len()`, ordered by key.
#[derive(Debug, Clone)]
pub struct Strata {
    pub ids: Vec<u32>,
    pub labels: Vec<String>,
}

impl Strata {
    pub fn new(dataset: &Dataset, discretizer: &Discretizer) -> Result<Self> {
        let keys = discretizer.keys(dataset)?;
        let mut index: BTreeMap<&StratumKey, u32> = keys.iter().map(|k| (k, 0)).collect();
        for (i, v) in index.values_mut().enumerate() {
            *v = i as u32;
        }
        let labels = index.keys().map(|k| discretizer.describe(k)).collect();
        let ids = keys.iter().map(|k| index[k]).collect();
        Ok(Strata { ids, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Arm {
    n: usize,
    sum: KahanSum,
}

impl Arm {
    fn mean(&self) -> f64 {
        self.sum.value() / self.n as f64
    }
}

/// Per-stratum arm totals over units `rows` (an index slice into y/t/ids).
fn accumulate(y: &[f64], t: &[u8], ids: &[u32], n_strata: usize) -> Vec<[Arm; 2]> {
    let mut arms = vec![[Arm::default(); 2]; n_strata];
    for ((&yi, &ti), &s) in y.iter().zip(t).zip(ids) {
        let a = &mut arms[s as usize][ti as usize];
        a.n += 1;
        a.sum.add(yi);
    }
    arms
}

fn one_armed(a: &[Arm; 2]) -> bool {
    a[0].n == 0 || a[1].n == 0
}

/// Outcome of a stratum-level computation before it becomes a report.
#[derive(Debug, Clone, Copy)]
pub struct KernelOutput {
    pub point: f64,
    pub n_used: usize,
    pub n_trimmed: usize,
    pub n_strata: usize,
    pub n_violating: usize,
    pub n_clipped: usize,
}

fn check_arms(arms: &[[Arm; 2]], labels: &[String], trim: bool) -> Result<(usize, usize)> {
    let mut n_violating = 0;
    let mut n_trimmed = 0;
    for (s, a) in arms.iter().enumerate() {
        if a[0].n + a[1].n > 0 && one_armed(a) {
            if !trim {
                return Err(Error::Overlap(format!(
                    "stratum {} has {} treated and {} untreated units; trim or re-bin",
                    labels[s], a[1].n, a[0].n
                )));
            }
            n_violating += 1;
            n_trimmed += a[0].n + a[1].n;
        }
    }
    Ok((n_violating, n_trimmed))
}

fn used_strata(arms: &[[Arm; 2]]) -> usize {
    arms.iter().filter(|a| a[0].n + a[1].n > 0).count()
}

/// IPW with the cell propensity of the same strata, optionally trimming
/// one-armed strata first. Over two-armed strata the propensity is
/// `n1/n_c`, so each unit's weight is known from the arm counts.
pub fn cell_ipw_kernel(
    y: &[f64],
    t: &[u8],
    ids: &[u32],
    labels: &[String],
    clip: Option<f64>,
    trim: bool,
) -> Result<KernelOutput> {
    let arms = accumulate(y, t, ids, labels.len());
    let (n_violating, n_trimmed) = if trim {
        check_arms(&arms, labels, true)?
    } else {
        let violating = arms.iter().filter(|a| a[0].n + a[1].n > 0 && one_armed(a)).count();
        (violating, 0)
    };
    let n_used = y.len() - n_trimmed;
    if n_used == 0 {
        return Err(Error::Overlap(
            "every stratum violates overlap; trimming would leave no units".into(),
        ));
    }
    let probs: Vec<f64> = arms
        .iter()
        .map(|a| a[1].n as f64 / (a[0].n + a[1].n) as f64)
        .collect();
    let mut acc = KahanSum::default();
    let mut n_clipped = 0;
    for ((&yi, &ti), &s) in y.iter().zip(t).zip(ids) {
        let a = &arms[s as usize];
        if trim && one_armed(a) {
            continue;
        }
        let raw = probs[s as usize];
        let p = match clip {
            Some(e) => {
                let c = raw.clamp(e, 1.0 - e);
                n_clipped += (c != raw) as usize;
                c
            }
            None if raw > 0.0 && raw < 1.0 => raw,
            None => {
                return Err(Error::Overlap(format!(
                    "stratum {} has propensity {raw} with clipping disabled",
                    labels[s as usize]
                )))
            }
        };
        acc.add(if ti == 1 { yi / p } else { -yi / (1.0 - p) });
    }
    Ok(KernelOutput {
        point: acc.value() / n_used as f64,
        n_used,
        n_trimmed,
        n_strata: used_strata(&arms),
        n_violating,
        n_clipped,
    })
}

/// Stratum-size-weighted average of `contrast(mean1, mean0)`.
pub fn stratified_kernel(
    y: &[f64],
    t: &[u8],
    ids: &[u32],
    labels: &[String],
    trim: bool,
    ratio: bool,
) -> Result<KernelOutput> {
    let arms = accumulate(y, t, ids, labels.len());
    let (n_violating, n_trimmed) = check_arms(&arms, labels, trim)?;
    let n_used = y.len() - n_trimmed;
    if n_used == 0 {
        return Err(Error::Overlap(
            "every stratum violates overlap; trimming would leave no units".into(),
        ));
    }
    let mut acc = KahanSum::default();
    for (s, a) in arms.iter().enumerate() {
        if a[0].n + a[1].n == 0 || one_armed(a) {
            continue;
        }
        let (m1, m0) = (a[1].mean(), a[0].mean());
        let contrast = if ratio {
            if m0 == 0.0 {
                return Err(Error::ZeroDenominator(labels[s].clone()));
            }
            m1 / m0
        } else {
            m1 - m0
        };
        acc.add((a[0].n + a[1].n) as f64 * contrast);
    }
    Ok(KernelOutput {
        point: acc.value() / n_used as f64,
        n_used,
        n_trimmed,
        n_strata: used_strata(&arms),
        n_violating,
        n_clipped: 0,
    })
}

fn stratified_report(
    dataset: &Dataset,
    features: &FeatureSet,
    bins: usize,
    ratio: bool,
) -> Result<EstimateReport> {
    let disc = Discretizer::fit(dataset, features, bins)?;
    let strata = Strata::new(dataset, &disc)?;
    let k = stratified_kernel(dataset.y(), dataset.t(), &strata.ids, &strata.labels, false, ratio)?;
    Ok(kernel_report(
        if ratio { Estimand::Tacrr } else { Estimand::Tace },
        features.adjustment(),
        k,
        dataset.len(),
    ))
}

fn kernel_report(estimand: Estimand, adjustment: Adjustment, k: KernelOutput, n: usize) -> EstimateReport {
    EstimateReport {
        estimand,
        point: k.point,
        n_used: k.n_used,
        trimmed_fraction: k.n_trimmed as f64 / n as f64,
        adjustment,
        diagnostics: Diagnostics {
            n_strata: Some(k.n_strata),
            n_violating_strata: k.n_violating,
            n_clipped: k.n_clipped,
            n_trimmed: k.n_trimmed,
        },
    }
}

/// `sum_c (n_c / n) (mean1_c - mean0_c)` over the strata of `features`.
pub fn stratified_tace(dataset: &Dataset, features: &FeatureSet, bins: usize) -> Result<EstimateReport> {
    stratified_report(dataset, features, bins, false)
}

/// `sum_c (n_c / n) (mean1_c / mean0_c)` over the strata of `features`.
pub fn tacrr(dataset: &Dataset, features: &FeatureSet, bins: usize) -> Result<EstimateReport> {
    stratified_report(dataset, features, bins, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropensityKind {
    Cell,
    Logistic,
}

/// How the TACE is computed when `estimand` is [`Estimand::Tace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaceMethod {
    Ipw,
    Stratified,
}

/// A fully configured estimator, as run by the CLI and the bootstrap.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    pub estimand: Estimand,
    pub method: TaceMethod,
    pub features: FeatureSet,
    pub propensity: PropensityKind,
    pub bins: usize,
    pub ridge: f64,
    pub clip: Option<f64>,
    pub trim: bool,
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        EstimatorSpec {
            estimand: Estimand::Tace,
            method: TaceMethod::Ipw,
            features: FeatureSet::none(),
            propensity: PropensityKind::Cell,
            bins: DEFAULT_BINS,
            ridge: DEFAULT_RIDGE,
            clip: Some(DEFAULT_CLIP),
            trim: false,
        }
    }
}

impl EstimatorSpec {
    pub fn tace(features: FeatureSet) -> Self {
        EstimatorSpec {
            features,
            ..EstimatorSpec::default()
        }
    }

    pub fn with_trim(mut self, trim: bool) -> Self {
        self.trim = trim;
        self
    }

    /// Does this estimator reduce to per-stratum arithmetic?
    fn stratum_based(&self) -> bool {
        match self.estimand {
            Estimand::NaiveDiff => false,
            Estimand::Tacrr => true,
            Estimand::Tace => {
                self.method == TaceMethod::Stratified || self.propensity == PropensityKind::Cell
            }
        }
    }

    /// Runs the estimator on `dataset`.
    pub fn evaluate(&self, dataset: &Dataset) -> Result<EstimateReport> {
        if self.stratum_based() {
            let disc = Discretizer::fit(dataset, &self.features, self.bins)?;
            let strata = Strata::new(dataset, &disc)?;
            return self.evaluate_strata(dataset.y(), dataset.t(), &strata.ids, &strata.labels);
        }
        match self.estimand {
            Estimand::NaiveDiff => naive_difference(dataset),
            _ => self.evaluate_logistic(dataset),
        }
    }

    /// Stratum-level evaluation on raw columns. Only valid when the
    /// estimator is stratum-based (see [`EstimatorSpec::evaluate`]).
    pub(crate) fn evaluate_strata(
        &self,
        y: &[f64],
        t: &[u8],
        ids: &[u32],
        labels: &[String],
    ) -> Result<EstimateReport> {
        let k = match (self.estimand, self.method) {
            (Estimand::Tacrr, _) => stratified_kernel(y, t, ids, labels, self.trim, true)?,
            (_, TaceMethod::Stratified) => stratified_kernel(y, t, ids, labels, self.trim, false)?,
            _ => cell_ipw_kernel(y, t, ids, labels, self.clip, self.trim)?,
        };
        Ok(kernel_report(self.estimand, self.features.adjustment(), k, y.len()))
    }

    fn evaluate_logistic(&self, dataset: &Dataset) -> Result<EstimateReport> {
        let fit = |ds: &Dataset| -> Result<PropensityModel> {
            let m = if self.features.is_empty() {
                fit_marginal(ds)?
            } else {
                fit_logistic(ds, &self.features, self.ridge)?
            };
            m.with_clip(self.clip)
        };
        let model = fit(dataset)?;
        if !self.trim {
            return ipw_tace(dataset, &model);
        }
        let report = propensity::overlap_report(&model, dataset)?;
        let trimmed = propensity::trim(dataset, &report)?;
        let model = if report.violations.is_empty() {
            model
        } else {
            fit(&trimmed)?
        };
        let mut out = ipw_tace(&trimmed, &model)?;
        out.trimmed_fraction = report.trimmed_fraction;
        out.diagnostics.n_violating_strata = report.violations.len();
        out.diagnostics.n_trimmed = report.n_violating_units();
        Ok(out)
    }
}

/// Strata of the full sample, prepared once so that resamples can reuse
/// them by gathering ids.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub strata: Option<Strata>,
}

impl EstimatorSpec {
    pub(crate) fn prepare(&self, dataset: &Dataset) -> Result<Prepared> {
        if self.stratum_based() {
            let disc = Discretizer::fit(dataset, &self.features, self.bins)?;
            Ok(Prepared {
                strata: Some(Strata::new(dataset, &disc)?),
            })
        } else {
            Ok(Prepared { strata: None })
        }
    }
}
