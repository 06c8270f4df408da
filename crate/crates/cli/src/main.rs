//! `mixren` command-line tool: simulation, fitting, renewal curves, the
//! renewal equation, Monte Carlo studies and Dirichlet-process tables.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::GridSpec;

#[derive(Debug, Parser)]
#[command(name = "mixren", version, about = "Mixed renewal processes with exchangeable inter-arrival times")]
pub struct Cli {
    /// TOML experiment file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every random stream
    #[arg(long, global = true, env = "MIXREN_SEED")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate exchangeable sequences to a seq_id,time CSV
    Simulate(SimulateArgs),
    /// Fit the Erlang-Gamma model to a seq_id,time CSV
    Fit(FitArgs),
    /// Evaluate a mixed renewal function on a grid
    Renewal(RenewalArgs),
    /// Solve the mixed renewal equation for a drift 1 - exp(-beta t)
    Solve(SolveArgs),
    /// Monte Carlo study of the exchangeable and i.i.d. fitted curves
    McStudy(McStudyArgs),
    /// Ewens weights, S_n CDFs or U(t) under a Dirichlet process
    Dp(DpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    ErlangGamma,
    ExpUniform,
    Gamma2Pareto,
    Dp,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// Model family
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Erlang shape
    #[arg(long)]
    pub m: Option<u32>,
    /// Gamma shape, Pareto shape, or DP concentration
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Exp-uniform rate
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Pareto scale
    #[arg(long)]
    pub k: Option<f64>,
    /// Rate of the exponential DP base
    #[arg(long)]
    pub rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sequence lengths, comma separated
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Where to write the fit summary (stdout if omitted)
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Where to write t,U_exch,U_iid,U_empirical
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long, value_parser = GridSpec::parse)]
    pub grid: Option<GridSpec>,
    #[arg(long)]
    pub m_min: Option<u32>,
    #[arg(long)]
    pub m_max: Option<u32>,
    /// Profile the i.i.d. Erlang shape instead of reusing m_hat
    #[arg(long)]
    pub iid_profile: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Closed,
    Series,
    Mc,
}

#[derive(Debug, Args)]
pub struct RenewalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = GridSpec::parse)]
    pub grid: Option<GridSpec>,
    #[arg(long, value_enum, default_value = "closed")]
    pub method: Method,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Series truncation tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MixtureKind {
    Discrete,
    Gamma,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Drift a(t) = 1 - exp(-beta t)
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum, default_value = "discrete")]
    pub mixture: MixtureKind,
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    /// Gamma mixing shape
    #[arg(long)]
    pub shape: Option<f64>,
    /// Gamma mixing rate
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long, value_parser = GridSpec::parse)]
    pub grid: Option<GridSpec>,
    /// Omit the i.i.d. comparator column
    #[arg(long)]
    pub no_comparator: bool,
    #[arg(long, default_value_t = mixren::latent::DEFAULT_LATENT_NODES)]
    pub quad_nodes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McStudyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, value_parser = GridSpec::parse)]
    pub grid: Option<GridSpec>,
    #[arg(long)]
    pub m_min: Option<u32>,
    #[arg(long)]
    pub m_max: Option<u32>,
    #[arg(long)]
    pub iid_profile: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DpTable {
    Weights,
    Sn,
    Renewal,
}

#[derive(Debug, Args)]
pub struct DpArgs {
    #[arg(long, value_enum, default_value = "renewal")]
    pub table: DpTable,
    /// Concentration
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Rate of the exponential base
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_parser = GridSpec::parse)]
    pub grid: Option<GridSpec>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = mixren::dirichlet::DEFAULT_N_MAX)]
    pub n_max: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mixren: {e}");
            e.exit_code()
        }
    }
}
