use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use interfere::data::load_dataset;
use interfere::estimators::{Estimand, EstimatorSpec, PropensityKind, TaceMethod};
use interfere::inference::{bootstrap, dependence_summary, inflate, InflationMethod, IntervalReport};
use interfere::signature::{attach_signature, column_name};
use interfere::simgen::{
    gen_canton, gen_counterexample_pair, generate, inject_interference, toy_linear, CantonConfig,
    ContextAssignment, DgpConfig, DgpKind, ToyModelParams,
};
use interfere::{AdjacencyFormat, AdjacencyGraph, Dataset, FeatureSet, Schema, SignatureSpec};
use serde::Serialize;

use crate::args::*;
use crate::report::Emitter;
use crate::CliError;

type Out<'a> = Emitter<std::io::StdoutLock<'a>>;

const DEFAULT_CONTEXT_UNITS: usize = 11_000;
const DEFAULT_CONTEXTS: usize = 1_000;
const DEFAULT_COUNTEREXAMPLE_UNITS: usize = 1_000;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_input(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("input file {} does not exist", path.display())))
    }
}

fn check_output(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(usage(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn load(path: &Path) -> Result<Dataset, CliError> {
    Ok(load_dataset(path, &Schema::default())?)
}

fn load_graph(args: &GraphArgs, n: usize) -> Result<Option<AdjacencyGraph>, CliError> {
    let Some(path) = &args.graph else {
        return Ok(None);
    };
    let format = match args.graph_format {
        GraphFormat::Edges => AdjacencyFormat::EdgeList,
        GraphFormat::Dense => AdjacencyFormat::Dense,
    };
    Ok(Some(interfere::data::load_adjacency(path, n, !args.no_self_loops, format)?))
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Lib(interfere::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn save_graph(graph: &AdjacencyGraph, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    graph.write_edge_list(&mut w).map_err(|e| io_error(path, e))?;
    w.flush().map_err(|e| io_error(path, e))
}

fn inflation(arg: InflateArg) -> InflationMethod {
    match arg {
        InflateArg::Avg => InflationMethod::Avg,
        InflateArg::Max => InflationMethod::Max,
        InflateArg::Sr => InflationMethod::Sr,
    }
}

#[derive(Serialize)]
struct SimulationReport {
    dgp: &'static str,
    seed: u64,
    n_units: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_contexts: Option<usize>,
    n_treated: usize,
    truth: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth_model2: Option<f64>,
    out: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    out2: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    graph_out: Option<PathBuf>,
}

pub fn simulate(a: &SimulateArgs, out: &mut Out) -> Result<(), CliError> {
    for p in [Some(&a.out), a.out2.as_ref(), a.graph_out.as_ref()].into_iter().flatten() {
        check_output(p)?;
    }
    if a.graph_out.is_some() && a.dgp != Dgp::Canton {
        return Err(usage("--graph-out applies only to --dgp canton"));
    }
    let report = match a.dgp {
        Dgp::Counterexample => {
            let out2 = a.out2.clone().ok_or_else(|| usage("--dgp counterexample needs --out2"))?;
            let n = a.units.unwrap_or(DEFAULT_COUNTEREXAMPLE_UNITS);
            let pair = gen_counterexample_pair(n, a.seed, a.c, a.alpha, a.alpha2, a.beta)?;
            pair.model1.save_csv(&a.out)?;
            pair.model2.save_csv(&out2)?;
            SimulationReport {
                dgp: "counterexample",
                seed: a.seed,
                n_units: n,
                n_contexts: None,
                n_treated: pair.model1.n_treated(),
                truth: pair.tace1,
                truth_model2: Some(pair.tace2),
                out: a.out.clone(),
                out2: Some(out2),
                graph_out: None,
            }
        }
        Dgp::Canton => {
            let d = CantonConfig::default();
            let cfg = CantonConfig {
                n_units: a.units.unwrap_or(d.n_units),
                seed: a.seed,
                k_nearest: a.k_nearest.unwrap_or(d.k_nearest),
                length_scale: a.length_scale.unwrap_or(d.length_scale),
                spatial_strength: a.spatial_strength.unwrap_or(d.spatial_strength),
                effect: a.effect.unwrap_or(d.effect),
                noise_sd: a.noise_sd.unwrap_or(d.noise_sd),
            };
            let data = gen_canton(&cfg)?;
            data.dataset.save_csv(&a.out)?;
            if let Some(path) = &a.graph_out {
                save_graph(&data.graph, path)?;
            }
            SimulationReport {
                dgp: "canton",
                seed: a.seed,
                n_units: cfg.n_units,
                n_contexts: None,
                n_treated: data.dataset.n_treated(),
                truth: data.truth,
                truth_model2: None,
                out: a.out.clone(),
                out2: None,
                graph_out: a.graph_out.clone(),
            }
        }
        dgp => {
            let (kind, name) = match dgp {
                Dgp::Basic => (DgpKind::Basic, "basic"),
                Dgp::Tdep => (DgpKind::TDependent, "tdep"),
                _ => (DgpKind::Product, "product"),
            };
            let mut cfg = DgpConfig::new(
                kind,
                a.units.unwrap_or(DEFAULT_CONTEXT_UNITS),
                a.contexts.unwrap_or(DEFAULT_CONTEXTS),
                a.seed,
            );
            if let Some(sd) = a.noise_sd {
                cfg.noise_sd = sd;
            }
            if let Some(c) = a.t_adjustment {
                cfg.t_adjustment = c;
            }
            cfg.assignment = match a.assignment {
                Assignment::Balanced => ContextAssignment::Balanced,
                Assignment::Iid => ContextAssignment::Iid,
            };
            let sim = generate(&cfg)?;
            sim.dataset.save_csv(&a.out)?;
            SimulationReport {
                dgp: name,
                seed: a.seed,
                n_units: cfg.n_units,
                n_contexts: Some(cfg.n_contexts),
                n_treated: sim.dataset.n_treated(),
                truth: sim.truth,
                truth_model2: None,
                out: a.out.clone(),
                out2: None,
                graph_out: None,
            }
        }
    };
    Ok(out.emit("simulation", &report)?)
}

#[derive(Serialize)]
struct SignatureReport {
    column: String,
    kind: &'static str,
    n_units: usize,
    min: f64,
    mean: f64,
    max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    isolated_units: Option<usize>,
    out: PathBuf,
}

pub fn signature(a: &SignatureArgs, out: &mut Out) -> Result<(), CliError> {
    check_input(&a.data)?;
    check_output(&a.out)?;
    if let Some(g) = &a.graph.graph {
        check_input(g)?;
    }
    let spec = match a.kind {
        SignatureKind::Context => SignatureSpec::ContextFraction,
        SignatureKind::ContextT => SignatureSpec::ContextFractionTAdjusted { c: a.c },
        SignatureKind::Adjacency => SignatureSpec::AdjacencyAverage,
        SignatureKind::Distance => SignatureSpec::InverseSquareDistance { floor: a.floor },
    };
    spec.validate()?;
    if a.kind == SignatureKind::Adjacency && a.graph.graph.is_none() {
        return Err(usage("--kind adjacency needs --graph"));
    }
    let ds = load(&a.data)?;
    let graph = load_graph(&a.graph, ds.len())?;
    let with = attach_signature(&ds, &spec, &a.name, graph.as_ref())?;
    with.save_csv(&a.out)?;
    let column = column_name(&a.name);
    let values = with.require_column(&column)?;
    let report = SignatureReport {
        kind: spec.kind(),
        n_units: values.len(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        isolated_units: graph
            .filter(|_| a.kind == SignatureKind::Adjacency)
            .map(|g| (0..g.n()).filter(|&i| g.neighbors(i).is_empty()).count()),
        column,
        out: a.out.clone(),
    };
    Ok(out.emit("signature", &report)?)
}

#[derive(Serialize)]
struct InjectReport {
    signature_col: String,
    scale_col: String,
    strength: f64,
    n_units: usize,
    mean_shift: f64,
    out: PathBuf,
}

pub fn inject(a: &InjectArgs, out: &mut Out) -> Result<(), CliError> {
    check_input(&a.data)?;
    check_output(&a.out)?;
    let ds = load(&a.data)?;
    let injected = inject_interference(&ds, &a.signature_col, &a.scale_col, a.strength)?;
    injected.save_csv(&a.out)?;
    let shift = injected.y().iter().zip(ds.y()).map(|(a, b)| a - b).sum::<f64>() / ds.len() as f64;
    let report = InjectReport {
        signature_col: a.signature_col.clone(),
        scale_col: a.scale_col.clone(),
        strength: a.strength,
        n_units: ds.len(),
        mean_shift: shift,
        out: a.out.clone(),
    };
    Ok(out.emit("inject", &report)?)
}

fn parse_clip(s: &str) -> Result<Option<f64>, CliError> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| usage(format!("--clip expects a number or \"none\", got {s:?}")))
}

fn features(a: &EstimateArgs, ds: &Dataset) -> FeatureSet {
    let x = a.x_cols.clone().unwrap_or_else(|| ds.covariate_names().to_vec());
    let i = a.i_cols.clone().unwrap_or_else(|| ds.signature_names().to_vec());
    match a.adjust {
        AdjustArg::None => FeatureSet::none(),
        AdjustArg::X => FeatureSet::new(x, Vec::new()),
        AdjustArg::XI => FeatureSet::new(x, i),
    }
}

pub fn estimate(a: &EstimateArgs, out: &mut Out) -> Result<(), CliError> {
    check_input(&a.data)?;
    if let Some(g) = &a.graph.graph {
        check_input(g)?;
    }
    let clip = parse_clip(&a.clip)?;
    if a.replicates.is_some() && a.seed.is_none() {
        return Err(usage("--replicates needs --seed"));
    }
    if a.graph.graph.is_some() && a.replicates.is_none() {
        return Err(usage("--graph on estimate inflates a bootstrap interval; add --replicates"));
    }
    if a.cluster_col.is_some() && a.replicates.is_none() {
        return Err(usage("--cluster-col needs --replicates"));
    }
    let ds = load(&a.data)?;
    let spec = EstimatorSpec {
        estimand: match a.estimand {
            EstimandArg::Tace => Estimand::Tace,
            EstimandArg::Tacrr => Estimand::Tacrr,
            EstimandArg::Naive => Estimand::NaiveDiff,
        },
        method: match a.method {
            MethodArg::Ipw => TaceMethod::Ipw,
            MethodArg::Stratified => TaceMethod::Stratified,
        },
        features: features(a, &ds),
        propensity: match a.propensity {
            PropensityArg::Cell => PropensityKind::Cell,
            PropensityArg::Logistic => PropensityKind::Logistic,
        },
        bins: a.bins,
        ridge: a.ridge,
        clip,
        trim: a.trim,
    };
    let graph = load_graph(&a.graph, ds.len())?;
    out.emit("estimate", &spec.evaluate(&ds)?)?;
    if let (Some(replicates), Some(seed)) = (a.replicates, a.seed) {
        let mut interval = bootstrap(&ds, &spec, replicates, seed, a.cluster_col.as_deref())?;
        if let Some(graph) = graph {
            let summary = dependence_summary(&graph)?;
            interval = inflate(&interval, &summary, inflation(a.inflate))?;
            out.emit("dependence", &summary)?;
        }
        out.emit("interval", &interval)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct InflatedInterval {
    method: InflationMethod,
    inflation_factor: f64,
    lo: f64,
    hi: f64,
    lo_inflated: f64,
    hi_inflated: f64,
}

pub fn inflate_cmd(a: &InflateArgs, out: &mut Out) -> Result<(), CliError> {
    let path = a.graph.graph.as_ref().ok_or_else(|| usage("inflate needs --graph"))?;
    check_input(path)?;
    let graph = load_graph(&a.graph, a.n)?.expect("graph path checked");
    let summary = dependence_summary(&graph)?;
    out.emit("dependence", &summary)?;
    if let (Some(lo), Some(hi)) = (a.lo, a.hi) {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(usage(format!("need finite --lo <= --hi, got [{lo}, {hi}]")));
        }
        let base = IntervalReport {
            estimand: Estimand::Tace,
            point: 0.5 * (lo + hi),
            lo,
            hi,
            lo_inflated: lo,
            hi_inflated: hi,
            inflation_factor: 1.0,
            inflation_method: None,
            replicates: 0,
            failed_replicates: 0,
            seed: 0,
        };
        let method = inflation(a.method);
        let r = inflate(&base, &summary, method)?;
        out.emit(
            "interval",
            &InflatedInterval {
                method,
                inflation_factor: r.inflation_factor,
                lo,
                hi,
                lo_inflated: r.lo_inflated,
                hi_inflated: r.hi_inflated,
            },
        )?;
    }
    Ok(())
}

pub fn toy(a: &ToyArgs, out: &mut Out) -> Result<(), CliError> {
    let params = ToyModelParams {
        alpha: a.alpha,
        beta: a.beta,
        gamma: a.gamma,
        rho: a.rho,
        delta: a.delta,
        treatments: (a.t1, a.t2, a.t3),
    };
    Ok(out.emit("toy", &toy_linear(a.example, &params)?)?)
}
