//! `graphmem`: train, evaluate and inspect graph memory networks.

mod commands;
mod data;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use graphmem::graphmem::NeighborWeights;
use graphmem::training::Mode;

#[derive(Debug, Parser)]
#[command(name = "graphmem", version, about = "Graph memory networks for molecular activity classification")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Flat `key=value` experiment config; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Threads computing per-example gradients; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on a task roster; writes checkpoint, metrics, epoch log and manifest.
    Train(TrainArgs),
    /// Score a checkpoint on one split of the roster.
    Eval(EvalArgs),
    /// Circular fingerprints of an SDF or MOL file as `id,hexstring` CSV.
    Fingerprint(FingerprintArgs),
    /// Compare model gradients with central finite differences on random graphs.
    Gradcheck(GradcheckArgs),
    /// Per-hop attention weights as JSON lines.
    DumpAttention(DumpArgs),
    /// Generate a synthetic motif-detection dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Task names, in roster order (repeat or comma-separate).
    #[arg(long = "task", value_delimiter = ',')]
    pub tasks: Vec<String>,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub data_dir: Option<String>,
    /// Override any config key, e.g. `--set hops=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Repeat the run recorded in a manifest.
    #[arg(long, conflicts_with_all = ["config", "tasks", "mode", "data_dir", "overrides", "seed"])]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = Split::Test)]
    pub split: Split,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = Split::Test)]
    pub split: Split,
    /// Dump at most this many examples.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FingerprintArgs {
    /// SDF or MOL file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long)]
    pub nbits: Option<usize>,
    /// Defaults to `<out-dir>/fingerprints.csv`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 5)]
    pub graphs: usize,
    #[arg(long, default_value_t = 8)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 3)]
    pub hops: usize,
    #[arg(long, default_value_t = 8)]
    pub hidden: usize,
    #[arg(long, default_value_t = NeighborWeights::Uniform)]
    pub neighbor_weights: NeighborWeights,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthetic dataset spec (`key=value`).
    #[arg(long)]
    pub spec: PathBuf,
    /// Task name; defaults to the spec file stem.
    #[arg(long)]
    pub name: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => commands::train(&cli.global, a),
        Command::Eval(a) => commands::eval(&cli.global, a),
        Command::Fingerprint(a) => commands::fingerprint(&cli.global, a),
        Command::Gradcheck(a) => commands::gradcheck(&cli.global, a),
        Command::DumpAttention(a) => commands::dump_attention(&cli.global, a),
        Command::Synth(a) => commands::synth(&cli.global, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
