use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "nspforge", version, about = "Nurse scheduling: mining, solving and constraint learning")]
pub struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// More log output on stderr (repeatable). NSPFORGE_LOG overrides it.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Association rules and high utility itemsets.
    #[command(subcommand)]
    Mine(MineCmd),
    /// Naive Bayes assignment prediction and Beta-Bernoulli simulation.
    #[command(subcommand)]
    Bayes(BayesCmd),
    /// Solve a WCSP instance.
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Learn constraints or NMF factors from past schedules.
    #[command(subcommand)]
    Learn(LearnCmd),
    /// Compare schedules and matrices.
    #[command(subcommand)]
    Eval(EvalCmd),
}

#[derive(Debug, Subcommand)]
pub enum MineCmd {
    /// Frequent itemsets and association rules (Apriori).
    Rules(RulesArgs),
    /// High utility itemsets (Two-Phase).
    Huim(HuimArgs),
    /// Build a schedule from mined rules or itemsets.
    Simulate(MineSimulateArgs),
}

#[derive(Debug, Args)]
pub struct RulesArgs {
    /// Transactions file (`label,item;item;...` lines).
    #[arg(long = "in", conflicts_with = "schedule", required_unless_present = "schedule")]
    pub input: Option<PathBuf>,
    /// Derive transactions from a schedule CSV instead.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GranularityArg::Day)]
    pub granularity: GranularityArg,
    /// Minimum support as a transaction count.
    #[arg(long)]
    pub min_support: u64,
    /// Minimum confidence, e.g. `0.6` or `3/5`.
    #[arg(long)]
    pub min_confidence: String,
    #[arg(long, value_enum, default_value_t = ShapeArg::All)]
    pub shape: ShapeArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GranularityArg {
    Day,
    DayShift,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ShapeArg {
    All,
    Single,
    PaperCompat,
}

#[derive(Debug, Args)]
pub struct HuimArgs {
    /// Quantity table CSV with a trailing `@utility` row.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub min_utility: String,
}

#[derive(Debug, Args)]
pub struct MineSimulateArgs {
    /// JSON written by `mine rules` or `mine huim`.
    #[arg(long)]
    pub patterns: PathBuf,
    /// Instance file giving the horizon and coverage bounds.
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Firing attempts per slot.
    #[arg(long, default_value_t = 1000)]
    pub max_iterations: usize,
    /// Also write the schedule as CSV.
    #[arg(long)]
    pub schedule_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum BayesCmd {
    /// Fit a Naive Bayes model on a labelled table.
    Train(TrainArgs),
    /// Score rows with a trained model.
    Predict(PredictArgs),
    /// Sample schedules from a Beta-Bernoulli posterior.
    Simulate(BayesSimulateArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Category CSV; the first column holds row labels.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub target_col: String,
    /// Comma-separated labels; defaults to every value in the table.
    #[arg(long, value_delimiter = ',')]
    pub universe: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model JSON written by `bayes train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Column holding the true labels, for accuracy and confusion.
    #[arg(long)]
    pub truth_col: Option<String>,
}

#[derive(Debug, Args)]
pub struct BayesSimulateArgs {
    /// Historical schedule CSVs.
    #[arg(long = "history", required = true, num_args = 1..)]
    pub history: Vec<PathBuf>,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum SolveCmd {
    /// Depth-first branch and bound.
    Bnb(BnbArgs),
    /// First feasible assignment.
    Dfs(SolveArgs),
    /// Stochastic local search.
    Sls(SlsArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance file with a `[domain]` section or a full pattern cost matrix.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = SenseArg::Min)]
    pub sense: SenseArg,
    /// Node consistency before search.
    #[arg(long)]
    pub nc: bool,
    /// Generalized arc consistency before search.
    #[arg(long)]
    pub gac: bool,
}

#[derive(Debug, Args)]
pub struct BnbArgs {
    #[command(flatten)]
    pub common: SolveArgs,
    /// Report every optimal assignment.
    #[arg(long)]
    pub all_optima: bool,
    /// Disable bound pruning (exhaustive search).
    #[arg(long)]
    pub no_bound: bool,
}

#[derive(Debug, Args)]
pub struct SlsArgs {
    #[command(flatten)]
    pub common: SolveArgs,
    #[arg(long, value_enum, default_value_t = InitArg::Dfs)]
    pub init: InitArg,
    /// Candidate moves evaluated before giving up.
    #[arg(long, default_value_t = 10_000)]
    pub budget: u64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SenseArg {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum InitArg {
    Random,
    Dfs,
    DfsCp,
}

#[derive(Debug, Subcommand)]
pub enum LearnCmd {
    /// Learn coverage and workload bounds.
    Csp(CspArgs),
    /// Factorize a nurse-by-slot matrix.
    Nmf(NmfArgs),
    /// Time constraint learning on synthetic corpora.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct CspArgs {
    /// Schedule CSVs forming the corpus.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Per-shift costs applied to every nurse, e.g. `1,2,1,3`.
    #[arg(long, value_delimiter = ',', requires = "wcsp_out")]
    pub costs: Vec<String>,
    /// Write the learned model as an instance file.
    #[arg(long, requires = "costs")]
    pub wcsp_out: Option<PathBuf>,
    /// Largest domain to materialize.
    #[arg(long, default_value_t = 1 << 24)]
    pub domain_cap: u64,
    /// Enumerate only patterns within the learned per-nurse bounds.
    #[arg(long)]
    pub streaming: bool,
}

#[derive(Debug, Args)]
pub struct NmfArgs {
    /// Numeric matrix CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub rank: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Partially filled matrix (`?` or empty for unknown cells) to complete.
    #[arg(long)]
    pub partial: Option<PathBuf>,
    /// Gate for `--partial`; defaults to half the closest row distance.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [10usize, 100])]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum EvalCmd {
    /// Frobenius distance between two matrix CSVs.
    Fn(FnArgs),
    /// Distances from an input schedule to generated ones.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct FnArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Generated schedule CSVs, or one JSON file from `bayes simulate`.
    #[arg(long, required = true, num_args = 1..)]
    pub generated: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = AggregationArg::Mean)]
    pub aggregation: AggregationArg,
    #[arg(long, default_value = "generated")]
    pub method: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AggregationArg {
    Mean,
    Min,
    Max,
}
