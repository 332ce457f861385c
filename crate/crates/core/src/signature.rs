//! Interference signatures: per-unit summaries of the treatments a unit is
//! exposed to through other units.

use std::collections::HashMap;

use crate::data::{pairwise_distances, AdjacencyGraph, Dataset, SIGNATURE_PREFIX};
use crate::error::{Error, Result};

/// Default distance floor for [`inverse_square_distance`].
pub const DEFAULT_DISTANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignatureSpec {
    /// Treated fraction among the other units of the same context.
    ContextFraction,
    /// Context fraction lowered by `c` for treated units, clamped at zero.
    ContextFractionTAdjusted { c: f64 },
    /// Mean treatment of graph neighbors.
    AdjacencyAverage,
    /// Treatment of all other units weighted by `1 / max(d, floor)^2`.
    InverseSquareDistance { floor: f64 },
}

impl SignatureSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SignatureSpec::ContextFractionTAdjusted { c } if !(c.is_finite() && c >= 0.0) => Err(
                Error::InvalidInput(format!("t-adjustment coefficient must be finite and >= 0, got {c}")),
            ),
            SignatureSpec::InverseSquareDistance { floor } if !(floor.is_finite() && floor > 0.0) => {
                Err(Error::InvalidInput(format!("distance floor must be finite and > 0, got {floor}")))
            }
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SignatureSpec::ContextFraction => "context_fraction",
            SignatureSpec::ContextFractionTAdjusted { .. } => "context_fraction_t_adjusted",
            SignatureSpec::AdjacencyAverage => "adjacency_average",
            SignatureSpec::InverseSquareDistance { .. } => "inverse_square_distance",
        }
    }
}

pub fn context_fraction(dataset: &Dataset) -> Result<Vec<f64>> {
    let ctx = dataset
        .context()
        .ok_or_else(|| Error::InvalidInput("context_fraction needs a context column".into()))?;
    let t = dataset.t();
    let mut groups: HashMap<i64, (usize, usize)> = HashMap::new();
    for (&c, &ti) in ctx.iter().zip(t) {
        let g = groups.entry(c).or_default();
        g.0 += ti as usize;
        g.1 += 1;
    }
    let mut singletons: Vec<i64> = groups.iter().filter(|(_, g)| g.1 < 2).map(|(&c, _)| c).collect();
    if !singletons.is_empty() {
        singletons.sort_unstable();
        return Err(Error::InvalidInput(format!(
            "context(s) {singletons:?} contain a single unit; the treated fraction of other units is undefined"
        )));
    }
    Ok(ctx
        .iter()
        .zip(t)
        .map(|(c, &ti)| {
            let (treated, total) = groups[c];
            (treated - ti as usize) as f64 / (total - 1) as f64
        })
        .collect())
}

pub fn context_fraction_t_adjusted(dataset: &Dataset, c: f64) -> Result<Vec<f64>> {
    SignatureSpec::ContextFractionTAdjusted { c }.validate()?;
    let base = context_fraction(dataset)?;
    Ok(base
        .into_iter()
        .zip(dataset.t())
        .map(|(i, &t)| (i - c * t as f64).max(0.0))
        .collect())
}

/// Mean neighbor treatment. Isolated units get 0; their indices are returned
/// alongside the values and logged as a warning.
pub fn adjacency_average(dataset: &Dataset, graph: &AdjacencyGraph) -> Result<(Vec<f64>, Vec<usize>)> {
    if graph.n() != dataset.len() {
        return Err(Error::InvalidInput(format!(
            "graph has {} nodes but dataset has {} units",
            graph.n(),
            dataset.len()
        )));
    }
    let t = dataset.t();
    let mut isolated = Vec::new();
    let values = (0..graph.n())
        .map(|i| {
            let ns = graph.neighbors(i);
            if ns.is_empty() {
                isolated.push(i);
                0.0
            } else {
                ns.iter().map(|&j| t[j] as usize).sum::<usize>() as f64 / ns.len() as f64
            }
        })
        .collect();
    if !isolated.is_empty() {
        log::warn!("adjacency_average: isolated units {isolated:?} get signature 0");
    }
    Ok((values, isolated))
}

pub fn inverse_square_distance(dataset: &Dataset, floor: f64) -> Result<Vec<f64>> {
    SignatureSpec::InverseSquareDistance { floor }.validate()?;
    if dataset.len() < 2 {
        return Err(Error::InvalidInput(
            "inverse_square_distance needs at least two units".into(),
        ));
    }
    let d = pairwise_distances(dataset)?;
    let t = dataset.t();
    let n = dataset.len();
    Ok((0..n)
        .map(|i| {
            let (mut num, mut den) = (0.0, 0.0);
            for j in (0..n).filter(|&j| j != i) {
                let w = d[(i, j)].max(floor).powi(-2);
                num += w * t[j] as f64;
                den += w;
            }
            // All-treated neighbors: num == den up to rounding.
            (num / den).clamp(0.0, 1.0)
        })
        .collect())
}

/// Computes `spec` without attaching it.
pub fn compute(dataset: &Dataset, spec: &SignatureSpec, graph: Option<&AdjacencyGraph>) -> Result<Vec<f64>> {
    spec.validate()?;
    match *spec {
        SignatureSpec::ContextFraction => context_fraction(dataset),
        SignatureSpec::ContextFractionTAdjusted { c } => context_fraction_t_adjusted(dataset, c),
        SignatureSpec::AdjacencyAverage => {
            let g = graph.ok_or_else(|| {
                Error::InvalidInput("adjacency_average needs an adjacency graph".into())
            })?;
            Ok(adjacency_average(dataset, g)?.0)
        }
        SignatureSpec::InverseSquareDistance { floor } => inverse_square_distance(dataset, floor),
    }
}

/// Canonical column name for a signature: `i_<name>`.
pub fn column_name(name: &str) -> String {
    if name.starts_with(SIGNATURE_PREFIX) {
        name.to_string()
    } else {
        format!("{SIGNATURE_PREFIX}{name}")
    }
}

/// Returns a new dataset with the signature appended as column `i_<name>`.
pub fn attach_signature(
    dataset: &Dataset,
    spec: &SignatureSpec,
    name: &str,
    graph: Option<&AdjacencyGraph>,
) -> Result<Dataset> {
    let col = column_name(name);
    if dataset.signature_names().contains(&col) {
        return Err(Error::InvalidInput(format!("signature column {col} already exists")));
    }
    let values = compute(dataset, spec, graph)?;
    dataset.clone().with_signature(col, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx_data(t: Vec<u8>, ctx: Vec<i64>) -> Dataset {
        Dataset::new(vec![0.0; t.len()], t).unwrap().with_context(ctx).unwrap()
    }

    #[test]
    fn context_fraction_examples() {
        assert_eq!(context_fraction(&ctx_data(vec![1, 1, 0], vec![0; 3])).unwrap(), [0.5, 0.5, 1.0]);
        assert_eq!(context_fraction(&ctx_data(vec![0, 0, 0], vec![4; 3])).unwrap(), [0.0; 3]);
        assert_eq!(
            context_fraction(&ctx_data(vec![1, 0, 1, 1], vec![0, 0, 1, 1])).unwrap(),
            [0.0, 1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn singleton_context_named() {
        let err = context_fraction(&ctx_data(vec![1, 0, 1], vec![0, 0, 9])).unwrap_err();
        assert!(err.to_string().contains("[9]"), "{err}");
    }

    #[test]
    fn t_adjusted_examples() {
        // Context of 3: unit 0 treated, others (1, 0) -> base 0.5.
        let ds = ctx_data(vec![1, 1, 0], vec![0; 3]);
        let v = context_fraction_t_adjusted(&ds, 0.1).unwrap();
        assert!((v[0] - 0.4).abs() < 1e-15);
        // Untreated unit unchanged.
        assert_eq!(v[2], 1.0);
        // Base 0.05 for a treated unit clamps to 0: 1 treated among 20 others.
        let mut t = vec![0u8; 21];
        t[0] = 1;
        t[1] = 1;
        let v = context_fraction_t_adjusted(&ctx_data(t, vec![0; 21]), 0.1).unwrap();
        assert_eq!(v[0], 0.0);
        assert!(context_fraction_t_adjusted(&ds, -0.1).is_err());
    }

    #[test]
    fn adjacency_examples() {
        let ds = Dataset::new(vec![0.0; 3], vec![1, 0, 1]).unwrap();
        let g = AdjacencyGraph::path(3, false).unwrap();
        assert_eq!(adjacency_average(&ds, &g).unwrap().0, [0.0, 1.0, 0.0]);

        let g = AdjacencyGraph::from_edges(3, &[(0, 1)], false).unwrap();
        let (v, isolated) = adjacency_average(&ds, &g).unwrap();
        assert_eq!(v[2], 0.0);
        assert_eq!(isolated, [2]);

        let ds4 = Dataset::new(vec![0.0; 4], vec![1, 1, 1, 0]).unwrap();
        let v = adjacency_average(&ds4, &AdjacencyGraph::complete(4, false).unwrap()).unwrap().0;
        assert_eq!(v, [2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0]);

        // Self-loops do not count as neighbors.
        let v = adjacency_average(&ds, &AdjacencyGraph::path(3, true).unwrap()).unwrap().0;
        assert_eq!(v, [0.0, 1.0, 0.0]);

        assert!(adjacency_average(&ds4, &g).is_err());
    }

    fn located(t: Vec<u8>, xs: &[f64]) -> Dataset {
        Dataset::new(vec![0.0; t.len()], t)
            .unwrap()
            .with_coords(xs.iter().map(|&x| [x, 0.0]).collect())
            .unwrap()
    }

    #[test]
    fn inverse_square_examples() {
        let v = inverse_square_distance(&located(vec![0, 1], &[0.0, 1.0]), 1e-6).unwrap();
        assert_eq!(v[0], 1.0);
        let v = inverse_square_distance(&located(vec![1, 0, 0], &[0.0, 1.0, 2.0]), 1e-6).unwrap();
        assert_eq!(v[0], 0.0);
        // Hand evaluation: weights 1/1 and 1/4, only the nearer unit treated.
        let v = inverse_square_distance(&located(vec![0, 1, 0], &[0.0, 1.0, 2.0]), 1e-6).unwrap();
        assert!((v[0] - 0.8).abs() < 1e-15);
        // Duplicate coordinates are handled by the floor.
        let v = inverse_square_distance(&located(vec![0, 1, 0], &[0.0, 0.0, 1.0]), 1e-3).unwrap();
        assert!(v.iter().all(|x| x.is_finite()));
        assert!(inverse_square_distance(&located(vec![1], &[0.0]), 1e-6).is_err());
        assert!(inverse_square_distance(&located(vec![1, 0], &[0.0, 1.0]), 0.0).is_err());
    }

    #[test]
    fn attach_examples() {
        let ds = ctx_data(vec![1, 0, 1], vec![0; 3]);
        let out = attach_signature(&ds, &SignatureSpec::ContextFraction, "i_ctx", None).unwrap();
        assert_eq!(out.signature_names(), ["i_ctx"]);
        assert!(ds.signature_names().is_empty());
        let again = attach_signature(&out, &SignatureSpec::ContextFraction, "ctx", None);
        assert!(matches!(again, Err(Error::InvalidInput(_))));
        let no_graph = attach_signature(&ds, &SignatureSpec::AdjacencyAverage, "adj", None);
        assert!(matches!(no_graph, Err(Error::InvalidInput(_))));
    }

    fn arb_contexts() -> impl Strategy<Value = (Vec<u8>, Vec<i64>)> {
        proptest::collection::vec((0u8..2, 0i64..4), 2..40).prop_map(|v| {
            let mut t: Vec<u8> = v.iter().map(|p| p.0).collect();
            let mut c: Vec<i64> = v.iter().map(|p| p.1).collect();
            // Pad every context to at least two units.
            for k in 0..4 {
                while c.iter().filter(|&&x| x == k).count() < 2 {
                    c.push(k);
                    t.push(0);
                }
            }
            (t, c)
        })
    }

    proptest! {
        #[test]
        fn builders_stay_in_unit_interval((t, c) in arb_contexts(), adj in 0.0f64..1.0) {
            let n = t.len();
            let ds = ctx_data(t, c.clone())
                .with_coords((0..n).map(|i| [(i % 7) as f64, (i / 7) as f64]).collect())
                .unwrap();
            let mut edges = Vec::new();
            for i in 0..n { for j in i + 1..n { if c[i] == c[j] { edges.push((i, j)); } } }
            let g = AdjacencyGraph::from_edges(n, &edges, false).unwrap();
            for v in [
                context_fraction(&ds).unwrap(),
                context_fraction_t_adjusted(&ds, adj).unwrap(),
                adjacency_average(&ds, &g).unwrap().0,
                inverse_square_distance(&ds, 1e-6).unwrap(),
            ] {
                prop_assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
            }
            // Complete-within-context graph reproduces the context fraction.
            prop_assert_eq!(adjacency_average(&ds, &g).unwrap().0, context_fraction(&ds).unwrap());
        }

        #[test]
        fn context_fraction_permutation_invariant((t, c) in arb_contexts(), seed in any::<u64>()) {
            let ds = ctx_data(t.clone(), c.clone());
            let base = context_fraction(&ds).unwrap();
            let mut idx: Vec<usize> = (0..t.len()).collect();
            let mut s = crate::rng::Stream::new(seed, 0, 0);
            for i in (1..idx.len()).rev() { idx.swap(i, s.below(i + 1)); }
            let perm = context_fraction(&ds.take(&idx).unwrap()).unwrap();
            for (k, &i) in idx.iter().enumerate() {
                prop_assert_eq!(perm[k], base[i]);
            }
        }

        #[test]
        fn all_treated_normalizes(n in 2usize..30, extra in proptest::collection::vec((0usize..30, 0usize..30), 0..40)) {
            let ds = Dataset::new(vec![0.0; n], vec![1; n]).unwrap()
                .with_coords((0..n).map(|i| [i as f64 * 0.37, (i * i) as f64 * 0.11]).collect()).unwrap();
            let edges: Vec<_> = extra.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            let g = AdjacencyGraph::from_edges(n, &edges, false).unwrap();
            let (adj, isolated) = adjacency_average(&ds, &g).unwrap();
            for i in 0..n {
                if !isolated.contains(&i) { prop_assert_eq!(adj[i], 1.0); }
            }
            prop_assert!(inverse_square_distance(&ds, 1e-6).unwrap().iter().all(|&v| v == 1.0));
        }
    }
}
