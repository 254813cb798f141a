use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "mgclr",
    version,
    about = "Micro-gesture skeleton representation learning and emotion-inference harness"
)]
pub struct Cli {
    /// Seed for every random stream of the run (overrides config files and presets).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Validate inputs and print the plan without writing anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled skeleton dataset.
    SynthGen(SynthGenArgs),
    /// Apply one augmentation to every sample of a dataset.
    AugmentPreview(AugmentPreviewArgs),
    /// Momentum-contrastive pretraining of one encoder stream.
    Pretrain(PretrainArgs),
    /// Linear probe on a frozen pretrained encoder.
    LinearEval(LinearEvalArgs),
    /// Fuse spatial and temporal score files.
    FuseEval(FuseEvalArgs),
    /// Mask player and match names in dialogue transcripts.
    EmoMask(EmoMaskArgs),
    /// Query win/lose confidences for masked transcripts.
    EmoInfer(EmoInferArgs),
    /// Score inference runs as Acc@k.
    EmoScore(EmoScoreArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SynthGen(_) => "synth-gen",
            Command::AugmentPreview(_) => "augment-preview",
            Command::Pretrain(_) => "pretrain",
            Command::LinearEval(_) => "linear-eval",
            Command::FuseEval(_) => "fuse-eval",
            Command::EmoMask(_) => "emo-mask",
            Command::EmoInfer(_) => "emo-infer",
            Command::EmoScore(_) => "emo-score",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Built-in preset: imigue-desk or ntu-like-desk.
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON config file layered over the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthGenArgs {
    /// `default` or a JSON spec file.
    #[arg(long, default_value = "default")]
    pub spec: String,
    /// Manifest path, or a directory that receives `dataset.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentPreviewArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Augmentation kind, e.g. `posterize_time`.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// spatial or temporal.
    #[arg(long)]
    pub stream: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Key-encoder momentum.
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub queue_size: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// `combo`, `identity`, or kinds joined by `+` with optional `:p` probabilities.
    #[arg(long)]
    pub policy: Option<String>,
}

#[derive(Debug, Args)]
pub struct LinearEvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated training subject ids.
    #[arg(long, value_delimiter = ',')]
    pub train_subjects: Option<Vec<u32>>,
}

#[derive(Debug, Args)]
pub struct FuseEvalArgs {
    #[arg(long)]
    pub spatial: PathBuf,
    #[arg(long)]
    pub temporal: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ChatArgs {
    /// Answer from fixture files in this directory instead of an endpoint.
    #[arg(long)]
    pub mock: Option<PathBuf>,
    /// Send prompts to the configured endpoint (needs the `live` feature).
    #[arg(long, conflicts_with = "mock")]
    pub live: bool,
    /// JSON file with an `endpoint` section.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmoMaskArgs {
    /// A transcript file or a directory of `*.transcript.json`.
    #[arg(long)]
    pub transcripts: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub chat: ChatArgs,
}

#[derive(Debug, Args)]
pub struct EmoInferArgs {
    /// Directory of `*.masked.json`.
    #[arg(long)]
    pub masked: PathBuf,
    /// Directory of `*.mg.json` event logs.
    #[arg(long)]
    pub mg: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub chat: ChatArgs,
}

#[derive(Debug, Args)]
pub struct EmoScoreArgs {
    /// Directory of `*.runs.json`.
    #[arg(long)]
    pub results: PathBuf,
    /// Directory of `*.mg.json` event logs holding the ground truth.
    #[arg(long)]
    pub mg: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    pub k: Vec<usize>,
    #[arg(long, default_value = "gpt-3.5-turbo")]
    pub model: String,
    #[arg(long)]
    pub out: PathBuf,
}
