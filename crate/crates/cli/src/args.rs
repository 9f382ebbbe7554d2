//! Command-line flags. Each flag group overrides the matching keys of a
//! [`RunConfig`] loaded from `--config`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ppm_core::evaluation::F1Mode;
use ppm_core::models::ModelType;

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "ppm", version, about = "Predictive process monitoring with multi-task Transformers and LSTMs")]
pub struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a log and print its statistics and split sizes.
    Validate {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Encode the splits and write the sample cache and normalizer.
    Preprocess {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArg,
        /// Sliding window width; the prefix encoding is used when absent.
        #[arg(long)]
        ngram: Option<usize>,
    },
    /// Train one explicit configuration.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Train every grid point of one model type.
    Gridsearch {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        seed: SeedArg,
        /// One of mtlformer, mtlformer_light, transformer_simple, lstm, lstm_light.
        #[arg(long)]
        model_type: Option<ModelType>,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Keep only the first N candidates.
        #[arg(long)]
        grid_limit: Option<usize>,
        /// Candidates trained concurrently.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Score grid results and copy out the chosen checkpoint.
    Select {
        #[command(flatten)]
        config: ConfigArg,
        /// Output directory of a `gridsearch` run.
        #[arg(long)]
        grid: PathBuf,
        /// Destination; defaults to the grid directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Weight of the relative loss excess in the composite score.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Compute test-split metrics and a per-sample dump for a checkpoint.
    Evaluate {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArg,
        /// Checkpoint written by `train` or `select`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Averaging of per-class F1 [default: weighted].
        #[arg(long, value_enum)]
        f1_mode: Option<F1ModeArg>,
    },
    /// Merge evaluated runs into result tables and loss curves.
    Report {
        /// Run directories holding `metrics.csv` and optionally `history.csv`.
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        /// Directory for results.csv, reduction.csv and curves/.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the flag and configuration-key reference as Markdown.
    #[command(hide = true)]
    Reference,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// TOML run configuration; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Event log CSV.
    #[arg(long = "data")]
    pub dataset: Option<PathBuf>,
    /// Log name used in reports; defaults to the file stem.
    #[arg(long)]
    pub log_name: Option<String>,
    /// Header of the case identifier column [default: case_id].
    #[arg(long)]
    pub case_column: Option<String>,
    /// Header of the activity column [default: activity].
    #[arg(long)]
    pub activity_column: Option<String>,
    /// Header of the role column [default: role].
    #[arg(long)]
    pub role_column: Option<String>,
    /// Header of the start timestamp column [default: start_timestamp].
    #[arg(long)]
    pub start_column: Option<String>,
    /// Header of the end timestamp column [default: end_timestamp].
    #[arg(long)]
    pub end_column: Option<String>,
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Source of all randomness [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// [default: 100]
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Epochs without validation improvement before stopping [default: 10].
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// One of mtlformer, mtlformer_light, transformer_simple, lstm, lstm_light.
    #[arg(long)]
    pub model_type: Option<ModelType>,
    /// Transformer embedding width.
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Attention heads; must divide the embedding width.
    #[arg(long)]
    pub heads: Option<usize>,
    /// Transformer feed-forward width.
    #[arg(long)]
    pub ff_dim: Option<usize>,
    /// Encoder layers per stream.
    #[arg(long)]
    pub encoder_layers: Option<usize>,
    /// LSTM hidden width.
    #[arg(long)]
    pub hidden_size: Option<usize>,
    /// LSTM n-gram window width.
    #[arg(long)]
    pub ngram: Option<usize>,
    /// Adam step size.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Training batch size.
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum F1ModeArg {
    Weighted,
    Macro,
}

impl From<F1ModeArg> for F1Mode {
    fn from(m: F1ModeArg) -> Self {
        match m {
            F1ModeArg::Weighted => F1Mode::Weighted,
            F1ModeArg::Macro => F1Mode::Macro,
        }
    }
}

fn set<T>(slot: &mut T, value: &Option<T>)
where
    T: Clone,
{
    if let Some(v) = value {
        *slot = v.clone();
    }
}

fn set_opt<T: Clone>(slot: &mut Option<T>, value: &Option<T>) {
    if value.is_some() {
        *slot = value.clone();
    }
}

impl DataArgs {
    pub fn apply(&self, c: &mut RunConfig) {
        set_opt(&mut c.dataset, &self.dataset);
        set_opt(&mut c.log_name, &self.log_name);
        set(&mut c.case_column, &self.case_column);
        set(&mut c.activity_column, &self.activity_column);
        set(&mut c.role_column, &self.role_column);
        set(&mut c.start_column, &self.start_column);
        set(&mut c.end_column, &self.end_column);
    }
}

impl OutArg {
    pub fn apply(&self, c: &mut RunConfig) {
        set_opt(&mut c.output_dir, &self.out);
    }
}

impl SeedArg {
    pub fn apply(&self, c: &mut RunConfig) {
        set(&mut c.seed, &self.seed);
    }
}

impl BudgetArgs {
    pub fn apply(&self, c: &mut RunConfig) {
        set(&mut c.max_epochs, &self.max_epochs);
        set(&mut c.patience, &self.patience);
    }
}

impl ModelArgs {
    pub fn apply(&self, c: &mut RunConfig) {
        set_opt(&mut c.model_type, &self.model_type);
        set_opt(&mut c.embed_dim, &self.embed_dim);
        set_opt(&mut c.heads, &self.heads);
        set_opt(&mut c.ff_dim, &self.ff_dim);
        set_opt(&mut c.encoder_layers, &self.encoder_layers);
        set_opt(&mut c.hidden_size, &self.hidden_size);
        set_opt(&mut c.ngram, &self.ngram);
        set_opt(&mut c.learning_rate, &self.learning_rate);
        set_opt(&mut c.batch_size, &self.batch_size);
    }
}
