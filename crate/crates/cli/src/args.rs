use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "interfere",
    version,
    about = "Treatment effects under interference: simulate, build signatures, estimate, inflate",
    args_override_self = true
)]
pub struct Cli {
    /// Output format for reports.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    pub format: Format,

    /// Worker threads for bootstrap replicates.
    #[arg(long, default_value_t = 1, global = true)]
    pub threads: usize,

    /// Flat JSON object whose keys mirror flag names; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Jsonl,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Simulate(SimulateArgs),
    /// Compute an interference signature column.
    Signature(SignatureArgs),
    /// Add a synthetic interference term to the outcome.
    Inject(InjectArgs),
    /// Estimate TACE, TACRR or the naive difference, optionally with a bootstrap interval.
    Estimate(EstimateArgs),
    /// Summarize graph dependence and inflate an interval.
    Inflate(InflateArgs),
    /// Evaluate the three-unit linear toy models.
    Toy(ToyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dgp {
    Basic,
    Tdep,
    Counterexample,
    Product,
    Canton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Assignment {
    Balanced,
    Iid,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub dgp: Dgp,
    #[arg(long)]
    pub units: Option<usize>,
    #[arg(long)]
    pub contexts: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Second dataset of a counterexample pair.
    #[arg(long)]
    pub out2: Option<PathBuf>,
    /// Edge list of the generated graph (canton only).
    #[arg(long)]
    pub graph_out: Option<PathBuf>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub t_adjustment: Option<f64>,
    #[arg(long, value_enum, default_value_t = Assignment::Balanced)]
    pub assignment: Assignment,
    /// Constant signature of the counterexample pair.
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub k_nearest: Option<usize>,
    #[arg(long)]
    pub length_scale: Option<f64>,
    #[arg(long)]
    pub spatial_strength: Option<f64>,
    #[arg(long)]
    pub effect: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignatureKind {
    /// Treated share of the other members of the unit's context.
    Context,
    /// Context share minus c times the unit's own treatment, floored at 0.
    ContextT,
    /// Treated share of graph neighbors.
    Adjacency,
    /// Inverse-square-distance weighted treated share.
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Edges,
    Dense,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Adjacency file (edge list by default).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GraphFormat::Edges)]
    pub graph_format: GraphFormat,
    /// Treat the graph as lacking self-loops (A_ii = 0).
    #[arg(long)]
    pub no_self_loops: bool,
}

#[derive(Debug, Args)]
pub struct SignatureArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub kind: SignatureKind,
    /// Column suffix; the column is written as i_<name>.
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub c: f64,
    #[arg(long, default_value_t = interfere::signature::DEFAULT_DISTANCE_FLOOR)]
    pub floor: f64,
    #[command(flatten)]
    pub graph: GraphArgs,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub signature_col: String,
    #[arg(long)]
    pub scale_col: String,
    #[arg(long)]
    pub strength: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimandArg {
    Tace,
    Tacrr,
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdjustArg {
    None,
    X,
    #[value(name = "x+i")]
    XI,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropensityArg {
    Cell,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ipw,
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InflateArg {
    Avg,
    Max,
    Sr,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = EstimandArg::Tace)]
    pub estimand: EstimandArg,
    #[arg(long, value_enum, default_value_t = AdjustArg::XI)]
    pub adjust: AdjustArg,
    /// Covariate columns (default: every x_ column).
    #[arg(long, value_delimiter = ',')]
    pub x_cols: Option<Vec<String>>,
    /// Signature columns (default: every i_ column).
    #[arg(long, value_delimiter = ',')]
    pub i_cols: Option<Vec<String>>,
    #[arg(long, value_enum, default_value_t = PropensityArg::Cell)]
    pub propensity: PropensityArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Ipw)]
    pub method: MethodArg,
    #[arg(long, default_value_t = interfere::propensity::DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value_t = interfere::propensity::DEFAULT_RIDGE)]
    pub ridge: f64,
    /// Propensity clip epsilon, or "none".
    #[arg(long, default_value = "0.01")]
    pub clip: String,
    /// Drop units in one-armed strata before estimating.
    #[arg(long)]
    pub trim: bool,
    /// Bootstrap replicates; omit for a point estimate only.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Resample whole clusters: "context" or any column name.
    #[arg(long)]
    pub cluster_col: Option<String>,
    /// Dependence measure used to inflate the interval (requires --graph).
    #[arg(long, value_enum, default_value_t = InflateArg::Sr)]
    pub inflate: InflateArg,
    #[command(flatten)]
    pub graph: GraphArgs,
}

#[derive(Debug, Args)]
pub struct InflateArgs {
    /// Number of units (graph nodes).
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = InflateArg::Sr)]
    pub method: InflateArg,
    #[arg(long, requires = "hi")]
    pub lo: Option<f64>,
    #[arg(long, requires = "lo")]
    pub hi: Option<f64>,
    #[command(flatten)]
    pub graph: GraphArgs,
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub example: u8,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 1)]
    pub t1: u8,
    #[arg(long, default_value_t = 1)]
    pub t2: u8,
    #[arg(long, default_value_t = 0)]
    pub t3: u8,
}
