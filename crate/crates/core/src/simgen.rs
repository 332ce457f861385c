//! Data generating processes with known causal estimands.
//!
//! All randomness comes from keyed streams (see [`crate::rng`]): covariate,
//! treatment, exposure and noise draws of unit `i` use stream index `i`,
//! context latents use the context label, so outputs are bit-reproducible
//! for a given configuration and seed.

use rand_distr::{Distribution, StandardNormal};

use crate::data::{AdjacencyGraph, Dataset};
use crate::error::{Error, Result};
use crate::propensity::sigmoid;
use crate::rng::{purpose, Stream};
use crate::signature::context_fraction;

/// Support of the covariate `X` and the context latent `U`.
pub const LEVELS: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

pub const COVARIATE_COL: &str = "x_1";
pub const SIGNATURE_COL: &str = "i_ctx";
pub const EXPOSURE_COL: &str = "oracle_w";
pub const LATENT_COL: &str = "oracle_u";

const MAX_ASSIGNMENT_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgpKind {
    Basic,
    TDependent,
    Counterexample,
    Product,
}

/// How units are spread over contexts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContextAssignment {
    /// A random permutation of `i mod n_contexts`: every context gets
    /// `floor(n/K)` or `ceil(n/K)` units, and each unit's label is still
    /// marginally uniform.
    #[default]
    Balanced,
    /// Independent uniform labels; assignments with a singleton context are
    /// redrawn up to 100 times.
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgpConfig {
    pub n_units: usize,
    pub n_contexts: usize,
    pub seed: u64,
    pub noise_sd: f64,
    pub t_adjustment: f64,
    pub kind: DgpKind,
    pub assignment: ContextAssignment,
}

impl DgpConfig {
    pub fn new(kind: DgpKind, n_units: usize, n_contexts: usize, seed: u64) -> Self {
        DgpConfig {
            n_units,
            n_contexts,
            seed,
            noise_sd: 1.0,
            t_adjustment: 0.1,
            kind,
            assignment: ContextAssignment::Balanced,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_contexts >= 1 && self.n_units >= self.n_contexts) {
            return Err(Error::InvalidInput(format!(
                "need n_units >= n_contexts >= 1 (got {} units, {} contexts)",
                self.n_units, self.n_contexts
            )));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd > 0.0) {
            return Err(Error::InvalidInput(format!("noise_sd must be > 0, got {}", self.noise_sd)));
        }
        if !(self.t_adjustment.is_finite() && self.t_adjustment >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "t_adjustment must be finite and >= 0, got {}",
                self.t_adjustment
            )));
        }
        Ok(())
    }
}

/// A generated dataset and the value of its target estimand.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub dataset: Dataset,
    pub truth: f64,
}

fn level(s: &mut Stream) -> f64 {
    LEVELS[s.below(LEVELS.len())]
}

fn assign_contexts(cfg: &DgpConfig) -> Result<Vec<i64>> {
    let (n, k) = (cfg.n_units, cfg.n_contexts);
    match cfg.assignment {
        ContextAssignment::Balanced => {
            if n < 2 * k {
                return Err(Error::InvalidInput(format!(
                    "{n} units over {k} contexts leaves singleton contexts; need n_units >= 2 * n_contexts"
                )));
            }
            let mut labels: Vec<i64> = (0..n).map(|i| (i % k) as i64).collect();
            let mut s = Stream::new(cfg.seed, purpose::CONTEXT_ASSIGN, 0);
            for i in (1..n).rev() {
                labels.swap(i, s.below(i + 1));
            }
            Ok(labels)
        }
        ContextAssignment::Iid => {
            for attempt in 0..MAX_ASSIGNMENT_ATTEMPTS {
                let mut s = Stream::new(cfg.seed, purpose::CONTEXT_ASSIGN, attempt);
                let labels: Vec<i64> = (0..n).map(|_| s.below(k) as i64).collect();
                let mut sizes = vec![0usize; k];
                for &l in &labels {
                    sizes[l as usize] += 1;
                }
                if sizes.iter().all(|&c| c != 1) {
                    return Ok(labels);
                }
            }
            Err(Error::InvalidInput(format!(
                "singleton contexts persisted after {MAX_ASSIGNMENT_ATTEMPTS} assignments; use fewer contexts"
            )))
        }
    }
}

/// Shared first stage: contexts, X, U, T and the context treated fraction.
struct Draws {
    context: Vec<i64>,
    u: Vec<f64>,
    x: Vec<f64>,
    t: Vec<u8>,
    fraction: Vec<f64>,
}

fn draw_common(cfg: &DgpConfig) -> Result<Draws> {
    cfg.validate()?;
    let context = assign_contexts(cfg)?;
    let latent: Vec<f64> = (0..cfg.n_contexts as u64)
        .map(|c| level(&mut Stream::new(cfg.seed, purpose::CONTEXT_LATENT, c)))
        .collect();
    let x: Vec<f64> = (0..cfg.n_units as u64)
        .map(|i| level(&mut Stream::new(cfg.seed, purpose::COVARIATE, i)))
        .collect();
    let t: Vec<u8> = (0..cfg.n_units)
        .map(|i| {
            let p = x[i] + latent[context[i] as usize];
            Stream::new(cfg.seed, purpose::TREATMENT, i as u64).bernoulli(p) as u8
        })
        .collect();
    let probe = Dataset::new(vec![0.0; cfg.n_units], t.clone())?.with_context(context.clone())?;
    let fraction = context_fraction(&probe)?;
    let u = context.iter().map(|&c| latent[c as usize]).collect();
    Ok(Draws {
        context,
        u,
        x,
        t,
        fraction,
    })
}

fn normal(cfg_seed: u64, i: usize) -> f64 {
    StandardNormal.sample(&mut Stream::new(cfg_seed, purpose::NOISE, i as u64))
}

fn additive_outcomes(cfg: &DgpConfig, d: Draws, signature: Vec<f64>) -> Result<Simulated> {
    let w: Vec<f64> = signature
        .iter()
        .enumerate()
        .map(|(i, &p)| Stream::new(cfg.seed, purpose::EXPOSURE, i as u64).bernoulli(p) as u8 as f64)
        .collect();
    let y: Vec<f64> = (0..cfg.n_units)
        .map(|i| 4.0 * d.x[i] + d.t[i] as f64 + 4.0 * w[i] + cfg.noise_sd * normal(cfg.seed, i))
        .collect();
    let dataset = Dataset::new(y, d.t)?
        .with_context(d.context)?
        .with_covariate(COVARIATE_COL, d.x)?
        .with_signature(SIGNATURE_COL, signature)?
        .with_oracle(EXPOSURE_COL, w)?
        .with_oracle(LATENT_COL, d.u)?;
    Ok(Simulated { dataset, truth: 1.0 })
}

/// Contexts with a shared latent `U`; `T ~ B(X + U)`, `I` the treated share
/// of the other context members, `W ~ B(I)`, `Y ~ N(4X + T + 4W, sd)`.
/// The TACE is 1.
pub fn gen_basic(cfg: &DgpConfig) -> Result<Simulated> {
    let d = draw_common(cfg)?;
    let sig = d.fraction.clone();
    additive_outcomes(cfg, d, sig)
}

/// As [`gen_basic`] with `I = max(0, fraction - t_adjustment * T)`.
pub fn gen_t_dependent(cfg: &DgpConfig) -> Result<Simulated> {
    let d = draw_common(cfg)?;
    let sig = d
        .fraction
        .iter()
        .zip(&d.t)
        .map(|(&f, &t)| (f - cfg.t_adjustment * t as f64).max(0.0))
        .collect();
    additive_outcomes(cfg, d, sig)
}

/// Ground-truth risk ratio of [`gen_product`]: `E[(2 + X) / (1 + X)]`.
pub fn product_tacrr() -> f64 {
    LEVELS.iter().map(|x| (2.0 + x) / (1.0 + x)).sum::<f64>() / LEVELS.len() as f64
}

/// `Y = (1 + T + X)(1 + I) + e` with `e ~ N(0, 0.1 * noise_sd)`.
pub fn gen_product(cfg: &DgpConfig) -> Result<Simulated> {
    let d = draw_common(cfg)?;
    let y: Vec<f64> = (0..cfg.n_units)
        .map(|i| {
            (1.0 + d.t[i] as f64 + d.x[i]) * (1.0 + d.fraction[i])
                + 0.1 * cfg.noise_sd * normal(cfg.seed, i)
        })
        .collect();
    let dataset = Dataset::new(y, d.t)?
        .with_context(d.context)?
        .with_covariate(COVARIATE_COL, d.x)?
        .with_signature(SIGNATURE_COL, d.fraction)?
        .with_oracle(LATENT_COL, d.u)?;
    Ok(Simulated {
        dataset,
        truth: product_tacrr(),
    })
}

/// Dispatches on `cfg.kind`. Counterexample pairs have their own entry
/// point, [`gen_counterexample_pair`].
pub fn generate(cfg: &DgpConfig) -> Result<Simulated> {
    match cfg.kind {
        DgpKind::Basic => gen_basic(cfg),
        DgpKind::TDependent => gen_t_dependent(cfg),
        DgpKind::Product => gen_product(cfg),
        DgpKind::Counterexample => Err(Error::InvalidInput(
            "counterexample datasets come in pairs; use gen_counterexample_pair".into(),
        )),
    }
}

#[derive(Debug, Clone)]
pub struct CounterexamplePair {
    pub model1: Dataset,
    pub model2: Dataset,
    pub tace1: f64,
    pub tace2: f64,
}

pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Two models with identical observational distributions but different
/// TACE: `Y = a T c + X` and `Y = a' T c + b T + X` with constant signature
/// `c` and `a c = a' c + b`. `X` is uniform on [`LEVELS`], `T ~ B(X + 0.25)`.
pub fn gen_counterexample_pair(
    n: usize,
    seed: u64,
    c: f64,
    alpha: f64,
    alpha2: f64,
    beta: f64,
) -> Result<CounterexamplePair> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least two units".into()));
    }
    if ![c, alpha, alpha2, beta].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("parameters must be finite".into()));
    }
    if (c - 1.0).abs() <= CONSTRAINT_TOL {
        return Err(Error::InvalidInput(
            "signature c = 1 makes both models share the same TACE".into(),
        ));
    }
    let gap = alpha * c - (alpha2 * c + beta);
    if gap.abs() > CONSTRAINT_TOL {
        return Err(Error::InvalidInput(format!(
            "constraint alpha*c = alpha'*c + beta violated by {gap:e}"
        )));
    }
    let x: Vec<f64> = (0..n as u64)
        .map(|i| level(&mut Stream::new(seed, purpose::COVARIATE, i)))
        .collect();
    let t: Vec<u8> = (0..n)
        .map(|i| Stream::new(seed, purpose::TREATMENT, i as u64).bernoulli(x[i] + 0.25) as u8)
        .collect();
    let y1: Vec<f64> = (0..n).map(|i| alpha * t[i] as f64 * c + x[i]).collect();
    let y2: Vec<f64> = (0..n)
        .map(|i| alpha2 * t[i] as f64 * c + beta * t[i] as f64 + x[i])
        .collect();
    let build = |y: Vec<f64>| -> Result<Dataset> {
        Dataset::new(y, t.clone())?
            .with_covariate(COVARIATE_COL, x.clone())?
            .with_signature("i_const", vec![c; n])
    };
    Ok(CounterexamplePair {
        model1: build(y1)?,
        model2: build(y2)?,
        tace1: alpha,
        tace2: alpha2 + beta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub delta: f64,
    pub treatments: (u8, u8, u8),
}

impl Default for ToyModelParams {
    fn default() -> Self {
        ToyModelParams {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            rho: 1.0,
            delta: 0.0,
            treatments: (1, 1, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ToyOutcome {
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
    pub recovered_alpha: f64,
    pub bias: f64,
}

/// Three-unit linear models. In example 1, units 1 and 3 both receive the
/// spillover `beta T2`, so `Y1 - Y3` recovers `alpha`. Example 2 adds a
/// spillover `delta T1` onto units 2 and 3, biasing the contrast by `-delta`.
pub fn toy_linear(example: u8, params: &ToyModelParams) -> Result<ToyOutcome> {
    let (t1, t2, t3) = params.treatments;
    if t1 > 1 || t2 > 1 || t3 > 1 {
        return Err(Error::InvalidInput("toy treatments must be 0 or 1".into()));
    }
    let delta = match example {
        1 => 0.0,
        2 => params.delta,
        _ => return Err(Error::InvalidInput(format!("toy example must be 1 or 2, got {example}"))),
    };
    let (t1, t2, t3) = (t1 as f64, t2 as f64, t3 as f64);
    let ToyModelParams {
        alpha, beta, gamma, rho, ..
    } = *params;
    let y1 = alpha * t1 + beta * t2;
    let y2 = gamma * t2 + delta * t1;
    let y3 = rho * t3 + beta * t2 + delta * t1;
    let recovered_alpha = y1 - y3;
    Ok(ToyOutcome {
        y1,
        y2,
        y3,
        recovered_alpha,
        bias: recovered_alpha - alpha,
    })
}

/// Adds `strength * I * scale` to every outcome.
pub fn inject_interference(
    dataset: &Dataset,
    signature_col: &str,
    scale_col: &str,
    strength: f64,
) -> Result<Dataset> {
    if !strength.is_finite() {
        return Err(Error::InvalidInput(format!("strength must be finite, got {strength}")));
    }
    let sig = dataset.require_column(signature_col)?;
    let scale = dataset.require_column(scale_col)?;
    let y = dataset
        .y()
        .iter()
        .zip(sig.iter().zip(scale))
        .map(|(&y, (&i, &s))| y + strength * i * s)
        .collect();
    dataset.with_outcome(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantonConfig {
    pub n_units: usize,
    pub seed: u64,
    /// Each unit is linked to this many nearest units (then symmetrized).
    pub k_nearest: usize,
    /// Length scale of the latent spatial field driving treatment uptake.
    pub length_scale: f64,
    /// Weight of the latent field in the treatment log-odds.
    pub spatial_strength: f64,
    pub effect: f64,
    pub noise_sd: f64,
}

impl Default for CantonConfig {
    fn default() -> Self {
        CantonConfig {
            n_units: 26,
            seed: 0,
            k_nearest: 4,
            length_scale: 0.25,
            spatial_strength: 2.0,
            effect: 1.0,
            noise_sd: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CantonData {
    pub dataset: Dataset,
    pub graph: AdjacencyGraph,
    pub truth: f64,
}

pub const DENSITY_COL: &str = "x_density";

/// Region-like units in the unit square with a nearest-neighbor adjacency.
///
/// Treatment uptake follows `logit P(T) = 0.5 x_1 + s * z`, where `z` is an
/// unobserved spatially smooth field (centered over the sample, so uptake
/// stays near one half), so neighbors' treatments are
/// correlated with a unit's own treatment. The outcome carries no
/// interference: `Y = effect * T + x_1 + 0.5 * x_density + e`. Interference
/// is added afterwards with [`inject_interference`].
pub fn gen_canton(cfg: &CantonConfig) -> Result<CantonData> {
    let n = cfg.n_units;
    if n < 3 || cfg.k_nearest == 0 || cfg.k_nearest >= n {
        return Err(Error::InvalidInput(
            "need at least 3 units and 0 < k_nearest < n_units".into(),
        ));
    }
    if !(cfg.length_scale > 0.0 && cfg.noise_sd > 0.0) {
        return Err(Error::InvalidInput("length_scale and noise_sd must be > 0".into()));
    }
    let coords: Vec<[f64; 2]> = (0..n as u64)
        .map(|i| {
            let mut s = Stream::new(cfg.seed, purpose::GEOMETRY, i);
            [s.uniform(), s.uniform()]
        })
        .collect();
    let dist = |a: usize, b: usize| (coords[a][0] - coords[b][0]).hypot(coords[a][1] - coords[b][1]);

    let mut edges = Vec::new();
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)));
        edges.extend(others.iter().take(cfg.k_nearest).map(|&j| (i, j)));
    }
    let graph = AdjacencyGraph::from_edges(n, &edges, true)?;

    let shocks: Vec<f64> = (0..n as u64)
        .map(|i| StandardNormal.sample(&mut Stream::new(cfg.seed, purpose::CONTEXT_LATENT, i)))
        .collect();
    let field: Vec<f64> = (0..n)
        .map(|i| {
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..n {
                let w = (-(dist(i, j) / cfg.length_scale).powi(2) / 2.0).exp();
                num += w * shocks[j];
                den += w * w;
            }
            num / den.sqrt()
        })
        .collect();
    let center = field.iter().sum::<f64>() / n as f64;
    let field: Vec<f64> = field.iter().map(|f| f - center).collect();

    let mut x = Vec::with_capacity(n);
    let mut density = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let mut s = Stream::new(cfg.seed, purpose::COVARIATE, i);
        let a: f64 = StandardNormal.sample(&mut s);
        let b: f64 = StandardNormal.sample(&mut s);
        x.push(a);
        density.push((0.5 * b).exp());
    }
    let t: Vec<u8> = (0..n)
        .map(|i| {
            let p = sigmoid(0.5 * x[i] + cfg.spatial_strength * field[i]);
            Stream::new(cfg.seed, purpose::TREATMENT, i as u64).bernoulli(p) as u8
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            cfg.effect * t[i] as f64 + x[i] + 0.5 * density[i] + cfg.noise_sd * normal(cfg.seed, i)
        })
        .collect();
    let dataset = Dataset::new(y, t)?
        .with_coords(coords)?
        .with_covariate(COVARIATE_COL, x)?
        .with_covariate(DENSITY_COL, density)?;
    Ok(CantonData {
        dataset,
        graph,
        truth: cfg.effect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_scale_contexts() {
        let cfg = DgpConfig::new(DgpKind::Basic, 110_000, 10_000, 1);
        let sim = gen_basic(&cfg).unwrap();
        let ctx = sim.dataset.context().unwrap();
        let mut sizes = vec![0usize; 10_000];
        for &c in ctx {
            sizes[c as usize] += 1;
        }
        assert!(sizes.iter().all(|&s| s == 11));
        let sig = sim.dataset.signature(SIGNATURE_COL).unwrap();
        assert!(sig.iter().all(|&v| ((v * 10.0).round() - v * 10.0).abs() < 1e-9));
        assert_eq!(sim.truth, 1.0);
    }

    #[test]
    fn treatment_rate_is_half() {
        let sim = gen_basic(&DgpConfig::new(DgpKind::Basic, 200_000, 20_000, 9)).unwrap();
        let rate = sim.dataset.n_treated() as f64 / sim.dataset.len() as f64;
        assert!((rate - 0.5).abs() < 0.01, "{rate}");
    }

    #[test]
    fn noiseless_outcome_equation() {
        let mut cfg = DgpConfig::new(DgpKind::Basic, 2_000, 200, 4);
        cfg.noise_sd = 1e-300;
        let sim = gen_basic(&cfg).unwrap();
        let d = &sim.dataset;
        let (x, w) = (d.covariate(COVARIATE_COL).unwrap(), d.oracle(EXPOSURE_COL).unwrap());
        for i in 0..d.len() {
            assert_eq!(d.y()[i], 4.0 * x[i] + d.t()[i] as f64 + 4.0 * w[i]);
        }
        // A unit with X = 0.1 and no exposure sits at 0.4 + T.
        let i = (0..d.len()).find(|&i| x[i] == 0.1 && w[i] == 0.0).unwrap();
        assert_eq!(d.y()[i], 0.4 + d.t()[i] as f64);
    }

    #[test]
    fn deterministic() {
        for kind in [DgpKind::Basic, DgpKind::TDependent, DgpKind::Product] {
            let cfg = DgpConfig::new(kind, 500, 50, 77);
            assert_eq!(generate(&cfg).unwrap().dataset, generate(&cfg).unwrap().dataset);
        }
        let a = gen_canton(&CantonConfig::default()).unwrap();
        let b = gen_canton(&CantonConfig::default()).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.graph, b.graph);
    }

    #[test]
    fn zero_adjustment_matches_basic() {
        let mut cfg = DgpConfig::new(DgpKind::TDependent, 1_000, 100, 5);
        cfg.t_adjustment = 0.0;
        assert_eq!(gen_t_dependent(&cfg).unwrap().dataset, gen_basic(&cfg).unwrap().dataset);
    }

    #[test]
    fn t_dependent_has_no_treated_high_signature() {
        for seed in 0..5 {
            let sim = gen_t_dependent(&DgpConfig::new(DgpKind::TDependent, 11_000, 1_000, seed)).unwrap();
            let d = &sim.dataset;
            let sig = d.signature(SIGNATURE_COL).unwrap();
            assert!(!(0..d.len()).any(|i| d.t()[i] == 1 && sig[i] > 0.9 + 1e-12));
            // Untreated units do reach I = 1.
            assert!((0..d.len()).any(|i| d.t()[i] == 0 && sig[i] > 0.9));
        }
    }

    #[test]
    fn singleton_contexts() {
        assert!(gen_basic(&DgpConfig::new(DgpKind::Basic, 10, 6, 0)).is_err());
        let mut cfg = DgpConfig::new(DgpKind::Basic, 1, 1, 0);
        cfg.assignment = ContextAssignment::Iid;
        assert!(gen_basic(&cfg).is_err());
        let mut cfg = DgpConfig::new(DgpKind::Basic, 400, 20, 0);
        cfg.assignment = ContextAssignment::Iid;
        let d = gen_basic(&cfg).unwrap().dataset;
        assert!(context_fraction(&d).is_ok());
    }

    #[test]
    fn product_truth_and_noiseless_ratio() {
        assert!((product_tacrr() - 1.8065).abs() < 1e-4);
        let mut cfg = DgpConfig::new(DgpKind::Product, 4_000, 400, 2);
        cfg.noise_sd = 1e-300;
        let d = gen_product(&cfg).unwrap().dataset;
        let (x, sig) = (d.covariate(COVARIATE_COL).unwrap(), d.signature(SIGNATURE_COL).unwrap());
        for i in 0..d.len() {
            assert_eq!(d.y()[i], (1.0 + d.t()[i] as f64 + x[i]) * (1.0 + sig[i]));
        }
        let y_at = |t: f64| (1.0 + t + 0.1) * (1.0 + 0.0);
        assert_eq!(y_at(1.0) / y_at(0.0), 2.1 / 1.1);
    }

    #[test]
    fn counterexample_constraint() {
        let pair = gen_counterexample_pair(100, 3, 2.0, 1.0, 0.5, 1.0).unwrap();
        assert_eq!((pair.tace1, pair.tace2), (1.0, 1.5));
        assert_eq!(pair.model1, pair.model2);
        assert!(gen_counterexample_pair(100, 3, 2.0, 1.0, 0.5, 1.1).is_err());
        assert!(gen_counterexample_pair(100, 3, 1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn toy_examples() {
        let p = ToyModelParams {
            alpha: 2.0,
            beta: 3.0,
            ..ToyModelParams::default()
        };
        let o = toy_linear(1, &p).unwrap();
        assert_eq!((o.y1, o.y3, o.recovered_alpha, o.bias), (5.0, 3.0, 2.0, 0.0));
        let p2 = ToyModelParams { delta: 0.5, ..p };
        let o2 = toy_linear(2, &p2).unwrap();
        assert_eq!((o2.recovered_alpha, o2.bias), (1.5, -0.5));
        let p0 = ToyModelParams { delta: 0.0, ..p };
        assert_eq!(toy_linear(2, &p0).unwrap(), o);
        assert!(toy_linear(3, &p).is_err());
    }

    #[test]
    fn injection() {
        let d = gen_basic(&DgpConfig::new(DgpKind::Basic, 200, 20, 1)).unwrap().dataset;
        assert_eq!(inject_interference(&d, SIGNATURE_COL, COVARIATE_COL, 0.0).unwrap(), d);
        let d2 = d
            .clone()
            .with_signature("i_c", vec![0.3; 200])
            .unwrap()
            .with_covariate("x_one", vec![1.0; 200])
            .unwrap();
        let shifted = inject_interference(&d2, "i_c", "x_one", 2.0).unwrap();
        for (a, b) in shifted.y().iter().zip(d2.y()) {
            assert!((a - b - 0.6).abs() < 1e-12);
        }
        assert!(inject_interference(&d, "i_missing", COVARIATE_COL, 1.0).is_err());
    }

    #[test]
    fn canton_shape() {
        let c = gen_canton(&CantonConfig::default()).unwrap();
        assert_eq!(c.dataset.len(), 26);
        assert_eq!(c.graph.n(), 26);
        assert!((0..26).all(|i| c.graph.neighbors(i).len() >= 4));
        assert!(c.dataset.coords().is_some());
    }
}
