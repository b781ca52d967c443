//! `mkge`: prepare datasets, train, evaluate and inspect multi-embedding
//! knowledge graph models.

mod commands;
mod config_file;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mkge_core::{ColumnOrder, LossForm, RestrictionKind, Split};

#[derive(Parser, Debug)]
#[command(name = "mkge", version, about = "Multi-embedding knowledge graph models")]
pub struct Cli {
    /// Plain-text `key = value` file; keys are long flag names. Flags given
    /// on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the vocabulary and encode raw triple files.
    Prepare(PrepareArgs),
    /// Train a model and write best/final checkpoints plus a log.
    Train(TrainArgs),
    /// Filtered MRR and Hit@{1,3,10} of a checkpoint on one split.
    Eval(EvalArgs),
    /// Score a single triple given by names.
    Score(ScoreArgs),
    /// Write concatenated entity and relation vectors as text.
    Export(ExportArgs),
    /// Print the weight vector stored in a checkpoint.
    InspectWeights(InspectArgs),
}

#[derive(Args, Debug)]
pub struct PrepareArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub valid: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Column layout of the raw files.
    #[arg(long, default_value = "hrt", value_parser = parse_columns)]
    pub columns: ColumnOrder,
    /// Output directory for the prepared dataset.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    /// A named preset (`--preset`).
    Preset,
    /// An explicit ω (`--omega`).
    Custom,
    /// ω learned with the embeddings.
    Learnable,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    /// Prepared dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for checkpoints and the log.
    #[arg(long)]
    pub out: PathBuf,

    /// distmult, complex, complex_equiv_{1,2,3}, cp, cph, cph_equiv,
    /// quaternion or uniform.
    #[arg(long, default_value = "complex")]
    pub preset: String,
    #[arg(long, value_enum, default_value_t = WeightMode::Preset)]
    pub weights: WeightMode,
    /// Comma-separated ω in (i, j, k) lexicographic order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega: Option<Vec<f64>>,
    #[arg(long, default_value = "softmax", value_parser = parse_restriction)]
    pub restriction: RestrictionKind,
    /// Add the Dirichlet sparsity penalty on learned ω.
    #[arg(long)]
    pub sparse: bool,
    #[arg(long, default_value_t = 1.0 / 16.0)]
    pub dirichlet_alpha: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub dirichlet_lambda: f64,
    /// L1 penalty on learned ω.
    #[arg(long, default_value_t = 0.0)]
    pub l1_lambda: f64,

    /// Embedding vectors per entity (default from the preset).
    #[arg(long)]
    pub n_e: Option<usize>,
    /// Embedding vectors per relation (default from the preset).
    #[arg(long)]
    pub n_r: Option<usize>,
    /// Size of each embedding vector (default 400 / n_e).
    #[arg(long)]
    pub dim: Option<usize>,

    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 4096)]
    pub batch_size: usize,
    /// L2 strength λ.
    #[arg(long, default_value_t = 1e-3)]
    pub l2: f64,
    #[arg(long, default_value_t = 1)]
    pub negatives: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 50)]
    pub eval_every: usize,
    /// Epochs without validation improvement before stopping.
    #[arg(long, default_value_t = 100)]
    pub patience: usize,
    #[arg(long, default_value = "softplus", value_parser = parse_loss)]
    pub loss: LossForm,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint stem, `.json` or `.bin` path.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "test", value_parser = parse_split)]
    pub split: Split,
    /// Report directory (default: next to the checkpoint).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write one line per rank record.
    #[arg(long, value_name = "PATH")]
    pub dump_ranks: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub head: String,
    #[arg(long)]
    pub relation: String,
    #[arg(long)]
    pub tail: String,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Directory receiving `entities.tsv` and `relations.tsv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Only print nonzero weights.
    #[arg(long)]
    pub nonzero: bool,
}

fn parse_columns(s: &str) -> Result<ColumnOrder, String> {
    s.parse().map_err(|e: mkge_core::Error| e.to_string())
}

fn parse_restriction(s: &str) -> Result<RestrictionKind, String> {
    s.parse().map_err(|e: mkge_core::Error| e.to_string())
}

fn parse_loss(s: &str) -> Result<LossForm, String> {
    s.parse().map_err(|e: mkge_core::Error| e.to_string())
}

fn parse_split(s: &str) -> Result<Split, String> {
    s.parse().map_err(|e: mkge_core::Error| e.to_string())
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("MKGE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("MKGE_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run() -> anyhow::Result<()> {
    let args = config_file::expand_args(std::env::args_os().collect())?;
    let cli = Cli::parse_from(args);
    init_threads()?;
    match cli.command {
        Command::Prepare(a) => commands::prepare(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Score(a) => commands::score(&a),
        Command::Export(a) => commands::export(&a),
        Command::InspectWeights(a) => commands::inspect_weights(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e)
            if e
                .downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
