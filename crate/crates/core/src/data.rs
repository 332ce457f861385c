//! Dataset and graph types, validation, and file ingestion.
//!
//! A [`Dataset`] is stored column-wise: outcome, treatment and identifiers as
//! flat vectors, covariates and signatures as named columns. Every
//! constructor validates the record invariants, so a `Dataset` value is
//! always well formed.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Header prefix for covariate columns in dataset CSVs.
pub const COVARIATE_PREFIX: &str = "x_";
/// Header prefix for signature columns in dataset CSVs.
pub const SIGNATURE_PREFIX: &str = "i_";
/// Header prefix for oracle-only columns (never consumed by estimators).
pub const ORACLE_PREFIX: &str = "oracle_";

/// One unit's values, materialized from a [`Dataset`] row.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRecord {
    pub unit_id: i64,
    pub y: f64,
    pub t: u8,
    pub x: Vec<f64>,
    pub context: Option<i64>,
    pub coord: Option<[f64; 2]>,
    pub sig: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    unit_id: Vec<i64>,
    y: Vec<f64>,
    t: Vec<u8>,
    covariate_names: Vec<String>,
    covariates: Vec<Vec<f64>>,
    signature_names: Vec<String>,
    signatures: Vec<Vec<f64>>,
    context: Option<Vec<i64>>,
    coord: Option<Vec<[f64; 2]>>,
    oracle_names: Vec<String>,
    oracle: Vec<Vec<f64>>,
}

fn check_finite(values: &[f64], column: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Validation {
            row: i + 1,
            column: column.to_string(),
            reason: format!("non-finite value {}", values[i]),
        }),
        None => Ok(()),
    }
}

impl Dataset {
    /// Creates a dataset from outcome and treatment columns. Unit ids default
    /// to the row index.
    pub fn new(y: Vec<f64>, t: Vec<u8>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidInput("dataset must contain at least one unit".into()));
        }
        if y.len() != t.len() {
            return Err(Error::InvalidInput(format!(
                "outcome has {} rows but treatment has {}",
                y.len(),
                t.len()
            )));
        }
        check_finite(&y, "y")?;
        if let Some(i) = t.iter().position(|&v| v > 1) {
            return Err(Error::Validation {
                row: i + 1,
                column: "t".into(),
                reason: format!("treatment must be 0 or 1, got {}", t[i]),
            });
        }
        Ok(Dataset {
            unit_id: (0..y.len() as i64).collect(),
            y,
            t,
            covariate_names: Vec::new(),
            covariates: Vec::new(),
            signature_names: Vec::new(),
            signatures: Vec::new(),
            context: None,
            coord: None,
            oracle_names: Vec::new(),
            oracle: Vec::new(),
        })
    }

    /// Builds a dataset from materialized records.
    pub fn from_records(
        records: &[UnitRecord],
        covariate_names: Vec<String>,
        signature_names: Vec<String>,
    ) -> Result<Self> {
        let y = records.iter().map(|r| r.y).collect();
        let t = records.iter().map(|r| r.t).collect();
        let mut ds = Dataset::new(y, t)?;
        for (row, r) in records.iter().enumerate() {
            if r.x.len() != covariate_names.len() || r.sig.len() != signature_names.len() {
                return Err(Error::Validation {
                    row: row + 1,
                    column: "x/sig".into(),
                    reason: "record width does not match column names".into(),
                });
            }
        }
        ds = ds.with_unit_ids(records.iter().map(|r| r.unit_id).collect())?;
        for (k, name) in covariate_names.into_iter().enumerate() {
            ds = ds.with_covariate(name, records.iter().map(|r| r.x[k]).collect())?;
        }
        for (k, name) in signature_names.into_iter().enumerate() {
            ds = ds.with_signature(name, records.iter().map(|r| r.sig[k]).collect())?;
        }
        if records.iter().any(|r| r.context.is_some()) {
            let ctx = records
                .iter()
                .enumerate()
                .map(|(row, r)| {
                    r.context.ok_or_else(|| Error::Validation {
                        row: row + 1,
                        column: "context".into(),
                        reason: "missing context label".into(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ds = ds.with_context(ctx)?;
        }
        if records.iter().any(|r| r.coord.is_some()) {
            let coords = records
                .iter()
                .enumerate()
                .map(|(row, r)| {
                    r.coord.ok_or_else(|| Error::Validation {
                        row: row + 1,
                        column: "coord".into(),
                        reason: "missing coordinates".into(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ds = ds.with_coords(coords)?;
        }
        Ok(ds)
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.len() {
            return Err(Error::InvalidInput(format!(
                "column {what} has {len} rows, dataset has {}",
                self.len()
            )));
        }
        Ok(())
    }

    fn check_new_name(&self, name: &str) -> Result<()> {
        let taken = self.covariate_names.iter().any(|n| n == name)
            || self.signature_names.iter().any(|n| n == name)
            || self.oracle_names.iter().any(|n| n == name)
            || ["unit_id", "y", "t", "context", "coord_x", "coord_y"].contains(&name);
        if taken {
            return Err(Error::InvalidInput(format!("column {name} already exists")));
        }
        Ok(())
    }

    pub fn with_unit_ids(mut self, ids: Vec<i64>) -> Result<Self> {
        self.check_len(ids.len(), "unit_id")?;
        let mut seen = HashSet::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if !seen.insert(*id) {
                return Err(Error::Validation {
                    row: i + 1,
                    column: "unit_id".into(),
                    reason: format!("duplicate unit_id {id}"),
                });
            }
        }
        self.unit_id = ids;
        Ok(self)
    }

    pub fn with_covariate(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        self.check_new_name(&name)?;
        self.check_len(values.len(), &name)?;
        check_finite(&values, &name)?;
        self.covariate_names.push(name);
        self.covariates.push(values);
        Ok(self)
    }

    pub fn with_signature(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        self.check_new_name(&name)?;
        self.check_len(values.len(), &name)?;
        check_finite(&values, &name)?;
        self.signature_names.push(name);
        self.signatures.push(values);
        Ok(self)
    }

    /// Adds a column that is carried along and serialized but never read by
    /// any estimator (e.g. a simulation's latent exposure).
    pub fn with_oracle(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        self.check_new_name(&name)?;
        self.check_len(values.len(), &name)?;
        check_finite(&values, &name)?;
        self.oracle_names.push(name);
        self.oracle.push(values);
        Ok(self)
    }

    pub fn with_context(mut self, context: Vec<i64>) -> Result<Self> {
        self.check_len(context.len(), "context")?;
        self.context = Some(context);
        Ok(self)
    }

    pub fn with_coords(mut self, coords: Vec<[f64; 2]>) -> Result<Self> {
        self.check_len(coords.len(), "coord")?;
        for (i, c) in coords.iter().enumerate() {
            if !c[0].is_finite() || !c[1].is_finite() {
                return Err(Error::Validation {
                    row: i + 1,
                    column: "coord".into(),
                    reason: "non-finite coordinate".into(),
                });
            }
        }
        self.coord = Some(coords);
        Ok(self)
    }

    /// Returns a copy with the outcome column replaced.
    pub fn with_outcome(&self, y: Vec<f64>) -> Result<Self> {
        self.check_len(y.len(), "y")?;
        check_finite(&y, "y")?;
        let mut out = self.clone();
        out.y = y;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn t(&self) -> &[u8] {
        &self.t
    }

    pub fn unit_ids(&self) -> &[i64] {
        &self.unit_id
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn signature_names(&self) -> &[String] {
        &self.signature_names
    }

    pub fn oracle_names(&self) -> &[String] {
        &self.oracle_names
    }

    pub fn context(&self) -> Option<&[i64]> {
        self.context.as_deref()
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coord.as_deref()
    }

    pub fn covariate(&self, name: &str) -> Option<&[f64]> {
        let k = self.covariate_names.iter().position(|n| n == name)?;
        Some(&self.covariates[k])
    }

    pub fn signature(&self, name: &str) -> Option<&[f64]> {
        let k = self.signature_names.iter().position(|n| n == name)?;
        Some(&self.signatures[k])
    }

    pub fn oracle(&self, name: &str) -> Option<&[f64]> {
        let k = self.oracle_names.iter().position(|n| n == name)?;
        Some(&self.oracle[k])
    }

    /// Looks a real-valued column up among covariates, then signatures, then
    /// oracle columns.
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.covariate(name)
            .or_else(|| self.signature(name))
            .or_else(|| self.oracle(name))
    }

    /// Like [`Dataset::column`] but reports a missing column as an error.
    pub fn require_column(&self, name: &str) -> Result<&[f64]> {
        self.column(name)
            .ok_or_else(|| Error::Schema(format!("no column named {name}")))
    }

    pub fn n_treated(&self) -> usize {
        self.t.iter().filter(|&&t| t == 1).count()
    }

    pub fn record(&self, i: usize) -> UnitRecord {
        UnitRecord {
            unit_id: self.unit_id[i],
            y: self.y[i],
            t: self.t[i],
            x: self.covariates.iter().map(|c| c[i]).collect(),
            context: self.context.as_ref().map(|c| c[i]),
            coord: self.coord.as_ref().map(|c| c[i]),
            sig: self.signatures.iter().map(|c| c[i]).collect(),
        }
    }

    pub fn records(&self) -> impl Iterator<Item = UnitRecord> + '_ {
        (0..self.len()).map(|i| self.record(i))
    }

    /// Gathers rows by index. Indices may repeat (bootstrap resamples); unit
    /// ids are then renumbered by position to keep them unique.
    pub fn take(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::InvalidInput("selection is empty".into()));
        }
        let gather = |col: &[f64]| idx.iter().map(|&i| col[i]).collect::<Vec<_>>();
        let mut seen = HashSet::with_capacity(idx.len());
        let unique = idx.iter().all(|i| seen.insert(*i));
        let unit_id = if unique {
            idx.iter().map(|&i| self.unit_id[i]).collect()
        } else {
            (0..idx.len() as i64).collect()
        };
        Ok(Dataset {
            unit_id,
            y: gather(&self.y),
            t: idx.iter().map(|&i| self.t[i]).collect(),
            covariate_names: self.covariate_names.clone(),
            covariates: self.covariates.iter().map(|c| gather(c)).collect(),
            signature_names: self.signature_names.clone(),
            signatures: self.signatures.iter().map(|c| gather(c)).collect(),
            context: self.context.as_ref().map(|c| idx.iter().map(|&i| c[i]).collect()),
            coord: self.coord.as_ref().map(|c| idx.iter().map(|&i| c[i]).collect()),
            oracle_names: self.oracle_names.clone(),
            oracle: self.oracle.iter().map(|c| gather(c)).collect(),
        })
    }

    /// Keeps the rows where `keep` is true.
    pub fn filter(&self, keep: &[bool]) -> Result<Self> {
        self.check_len(keep.len(), "mask")?;
        let idx: Vec<usize> = keep
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| k.then_some(i))
            .collect();
        self.take(&idx)
    }

    /// Writes the dataset as CSV using the conventional column names.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["unit_id".to_string(), "y".into(), "t".into()];
        if self.context.is_some() {
            header.push("context".into());
        }
        if self.coord.is_some() {
            header.push("coord_x".into());
            header.push("coord_y".into());
        }
        header.extend(self.covariate_names.iter().cloned());
        header.extend(self.signature_names.iter().cloned());
        header.extend(self.oracle_names.iter().cloned());
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for i in 0..self.len() {
            row.clear();
            row.push(self.unit_id[i].to_string());
            row.push(self.y[i].to_string());
            row.push(self.t[i].to_string());
            if let Some(c) = &self.context {
                row.push(c[i].to_string());
            }
            if let Some(c) = &self.coord {
                row.push(c[i][0].to_string());
                row.push(c[i][1].to_string());
            }
            for col in self.covariates.iter().chain(&self.signatures).chain(&self.oracle) {
                row.push(col[i].to_string());
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv writer>".into(),
            source: e,
        })?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Selects a group of real-valued columns from a CSV header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelect {
    /// Every header beginning with the prefix, in file order.
    Prefix(String),
    /// Exactly these headers; each must be present.
    Names(Vec<String>),
}

impl ColumnSelect {
    fn resolve(&self, headers: &[String]) -> Result<Vec<usize>> {
        match self {
            ColumnSelect::Prefix(p) => Ok(headers
                .iter()
                .enumerate()
                .filter(|(_, h)| h.starts_with(p.as_str()))
                .map(|(i, _)| i)
                .collect()),
            ColumnSelect::Names(names) => names
                .iter()
                .map(|n| {
                    headers
                        .iter()
                        .position(|h| h == n)
                        .ok_or_else(|| Error::Schema(format!("missing column {n}")))
                })
                .collect(),
        }
    }
}

/// Maps CSV headers onto dataset fields by name.
#[derive(Debug, Clone)]
pub struct Schema {
    pub unit_id: String,
    pub y: String,
    pub t: String,
    pub context: String,
    pub coord_x: String,
    pub coord_y: String,
    pub covariates: ColumnSelect,
    pub signatures: ColumnSelect,
    pub oracle: ColumnSelect,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            unit_id: "unit_id".into(),
            y: "y".into(),
            t: "t".into(),
            context: "context".into(),
            coord_x: "coord_x".into(),
            coord_y: "coord_y".into(),
            covariates: ColumnSelect::Prefix(COVARIATE_PREFIX.into()),
            signatures: ColumnSelect::Prefix(SIGNATURE_PREFIX.into()),
            oracle: ColumnSelect::Prefix(ORACLE_PREFIX.into()),
        }
    }
}

fn parse_f64(s: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Validation {
        row,
        column: column.to_string(),
        reason: format!("not a number: {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Validation {
            row,
            column: column.to_string(),
            reason: format!("non-finite value {s:?}"),
        });
    }
    Ok(v)
}

fn parse_i64(s: &str, row: usize, column: &str) -> Result<i64> {
    s.trim().parse().map_err(|_| Error::Validation {
        row,
        column: column.to_string(),
        reason: format!("not an integer: {s:?}"),
    })
}

/// Reads a dataset from CSV. Row order is preserved.
pub fn load_dataset(path: &Path, schema: &Schema) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    read_dataset(file, schema)
}

pub fn read_dataset<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let y_col = find(&schema.y).ok_or_else(|| Error::Schema(format!("missing column {}", schema.y)))?;
    let t_col = find(&schema.t).ok_or_else(|| Error::Schema(format!("missing column {}", schema.t)))?;
    let id_col = find(&schema.unit_id);
    let ctx_col = find(&schema.context);
    let coord_cols = match (find(&schema.coord_x), find(&schema.coord_y)) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => {
            return Err(Error::Schema(format!(
                "coordinates need both {} and {}",
                schema.coord_x, schema.coord_y
            )))
        }
    };
    let cov_cols = schema.covariates.resolve(&headers)?;
    let sig_cols = schema.signatures.resolve(&headers)?;
    let oracle_cols = schema.oracle.resolve(&headers)?;

    let mut ids = Vec::new();
    let mut y = Vec::new();
    let mut t = Vec::new();
    let mut ctx = Vec::new();
    let mut coords = Vec::new();
    let mut cov = vec![Vec::new(); cov_cols.len()];
    let mut sig = vec![Vec::new(); sig_cols.len()];
    let mut ora = vec![Vec::new(); oracle_cols.len()];

    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let cell = |c: usize| rec.get(c).unwrap_or("");
        ids.push(match id_col {
            Some(c) => parse_i64(cell(c), row, &headers[c])?,
            None => i as i64,
        });
        y.push(parse_f64(cell(y_col), row, &headers[y_col])?);
        let tv = parse_f64(cell(t_col), row, &headers[t_col])?;
        if tv != 0.0 && tv != 1.0 {
            return Err(Error::Validation {
                row,
                column: headers[t_col].clone(),
                reason: format!("treatment must be 0 or 1, got {}", cell(t_col)),
            });
        }
        t.push(tv as u8);
        if let Some(c) = ctx_col {
            ctx.push(parse_i64(cell(c), row, &headers[c])?);
        }
        if let Some((a, b)) = coord_cols {
            coords.push([
                parse_f64(cell(a), row, &headers[a])?,
                parse_f64(cell(b), row, &headers[b])?,
            ]);
        }
        for (dst, &c) in cov.iter_mut().zip(&cov_cols) {
            dst.push(parse_f64(cell(c), row, &headers[c])?);
        }
        for (dst, &c) in sig.iter_mut().zip(&sig_cols) {
            dst.push(parse_f64(cell(c), row, &headers[c])?);
        }
        for (dst, &c) in ora.iter_mut().zip(&oracle_cols) {
            dst.push(parse_f64(cell(c), row, &headers[c])?);
        }
    }
    if y.is_empty() {
        return Err(Error::InvalidInput("dataset has no rows".into()));
    }

    let mut ds = Dataset::new(y, t)?.with_unit_ids(ids)?;
    if ctx_col.is_some() {
        ds = ds.with_context(ctx)?;
    }
    if coord_cols.is_some() {
        ds = ds.with_coords(coords)?;
    }
    for (vals, &c) in cov.into_iter().zip(&cov_cols) {
        ds = ds.with_covariate(headers[c].clone(), vals)?;
    }
    for (vals, &c) in sig.into_iter().zip(&sig_cols) {
        ds = ds.with_signature(headers[c].clone(), vals)?;
    }
    for (vals, &c) in ora.into_iter().zip(&oracle_cols) {
        ds = ds.with_oracle(headers[c].clone(), vals)?;
    }
    Ok(ds)
}

/// Undirected relation between units, stored as sorted neighbor lists.
/// Self-loops are not stored; `self_loops` states whether `A_ii = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyGraph {
    n: usize,
    neighbors: Vec<Vec<usize>>,
    self_loops: bool,
}

impl AdjacencyGraph {
    /// Builds a graph from unordered pairs. Pairs `(i, i)` are ignored; the
    /// diagonal is governed by `self_loops` alone.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], self_loops: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("graph needs at least one node".into()));
        }
        let mut sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Graph(format!("edge ({a},{b}) has an index outside [0,{n})")));
            }
            if a != b {
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        Ok(AdjacencyGraph {
            n,
            neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            self_loops,
        })
    }

    pub fn path(n: usize, self_loops: bool) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges, self_loops)
    }

    pub fn complete(n: usize, self_loops: bool) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Self::from_edges(n, &edges, self_loops)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn self_loops(&self) -> bool {
        self.self_loops
    }

    /// Returns the same edges with the diagonal flag replaced.
    pub fn with_self_loops(&self, self_loops: bool) -> Self {
        AdjacencyGraph {
            self_loops,
            ..self.clone()
        }
    }

    /// Neighbors of `i`, excluding `i` itself.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j {
            self.self_loops
        } else {
            self.neighbors[i].binary_search(&j).is_ok()
        }
    }

    /// Undirected edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    /// Dense 0/1 adjacency matrix, diagonal included per `self_loops`.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.has_edge(i, j) as u8).collect())
            .collect()
    }

    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "src,dst")?;
        for (a, b) in self.edges() {
            writeln!(w, "{a},{b}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdjacencyFormat {
    /// One `src,dst` pair per line, 0-based. A non-numeric first line is
    /// treated as a header.
    #[default]
    EdgeList,
    /// `n` lines of `n` comma- or whitespace-separated 0/1 entries.
    Dense,
}

pub fn load_adjacency(
    path: &Path,
    n: usize,
    self_loops: bool,
    format: AdjacencyFormat,
) -> Result<AdjacencyGraph> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    read_adjacency(BufReader::new(file), n, self_loops, format)
}

pub fn read_adjacency<R: BufRead>(
    reader: R,
    n: usize,
    self_loops: bool,
    format: AdjacencyFormat,
) -> Result<AdjacencyGraph> {
    let split = |line: &str| -> Vec<String> {
        line.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    };
    let io_err = |e| Error::Io {
        path: "<adjacency>".into(),
        source: e,
    };
    match format {
        AdjacencyFormat::EdgeList => {
            let mut edges = Vec::new();
            for (lineno, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err)?;
                let fields = split(&line);
                if fields.is_empty() {
                    continue;
                }
                let parsed: Option<Vec<usize>> = fields.iter().map(|f| f.parse().ok()).collect();
                match parsed {
                    Some(v) if v.len() == 2 => edges.push((v[0], v[1])),
                    None if lineno == 0 => continue,
                    _ => {
                        return Err(Error::Graph(format!(
                            "line {}: expected `src,dst`, got {line:?}",
                            lineno + 1
                        )))
                    }
                }
            }
            AdjacencyGraph::from_edges(n, &edges, self_loops)
        }
        AdjacencyFormat::Dense => {
            let mut rows: Vec<Vec<u8>> = Vec::new();
            for (lineno, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err)?;
                let fields = split(&line);
                if fields.is_empty() {
                    continue;
                }
                let row = fields
                    .iter()
                    .map(|f| match f.as_str() {
                        "0" => Ok(0),
                        "1" => Ok(1),
                        _ => Err(Error::Graph(format!(
                            "line {}: dense entries must be 0 or 1, got {f:?}",
                            lineno + 1
                        ))),
                    })
                    .collect::<Result<Vec<u8>>>()?;
                if row.len() != n {
                    return Err(Error::Graph(format!(
                        "line {}: expected {n} entries, got {}",
                        lineno + 1,
                        row.len()
                    )));
                }
                rows.push(row);
            }
            if rows.len() != n {
                return Err(Error::Graph(format!("expected {n} rows, got {}", rows.len())));
            }
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if rows[i][j] != rows[j][i] {
                        return Err(Error::Graph(format!("matrix is not symmetric at ({i},{j})")));
                    }
                    if j > i && rows[i][j] == 1 {
                        edges.push((i, j));
                    }
                }
            }
            AdjacencyGraph::from_edges(n, &edges, self_loops)
        }
    }
}

/// Euclidean distances between unit coordinates.
pub fn pairwise_distances(dataset: &Dataset) -> Result<DMatrix<f64>> {
    let coords = dataset
        .coords()
        .ok_or_else(|| Error::InvalidInput("pairwise distances need coordinates".into()))?;
    let n = coords.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = (coords[i][0] - coords[j][0]).hypot(coords[i][1] - coords[j][1]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}
