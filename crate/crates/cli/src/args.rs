use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vlbias", version, about = "Measure and mitigate gender bias in vision-language assistants")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Pipeline TOML with [curation], [prompts], [bias] and [debias] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root for all artifacts; each stage writes to a subdirectory.
    #[arg(long, global = true, default_value = "vlbias-out")]
    pub out_dir: PathBuf,
    /// Root for relative model checkpoint paths.
    #[arg(long, global = true, env = "VLBIAS_MODEL_CACHE")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter, score and sample the evaluation images.
    Curate(CurateArgs),
    /// Enumerate and render prompt variations.
    Prompts(PromptsArgs),
    /// Query a model on every (image, prompt) pair, or run a suitability probe.
    Evaluate(EvaluateArgs),
    /// Bias statistics, model summaries and rankings from response logs.
    Analyze(AnalyzeArgs),
    /// Run one debiasing method on a trainable model.
    Debias(DebiasArgs),
    /// Figures and tables from analysis outputs.
    Report(ReportArgs),
    /// Inter-model gap correlations and the labor-statistics correlation.
    Correlate(CorrelateArgs),
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    /// Source manifest CSV; repeat for several datasets.
    #[arg(long = "manifest", required = true)]
    pub manifests: Vec<PathBuf>,
    /// Adapter TOML of the judge model used to score unscored images.
    #[arg(long)]
    pub judge: Option<PathBuf>,
    #[arg(long)]
    pub occupation_threshold: Option<f64>,
    #[arg(long)]
    pub per_dataset: Option<usize>,
    /// CSV with `id,label` human occupation labels for the agreement curve.
    #[arg(long)]
    pub reference_labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttributesArg {
    All,
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct PromptsArgs {
    /// Prompt groups to render; defaults to the config or all three.
    #[arg(long = "group")]
    pub groups: Vec<String>,
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    /// Restrict to the train or test half of each attribute catalog.
    #[arg(long, value_enum)]
    pub attributes: Option<AttributesArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeArg {
    Gender,
    Occupation,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub adapter: PathBuf,
    /// Curated image manifest (JSONL).
    #[arg(long)]
    pub images: PathBuf,
    /// Prompt dump (JSONL); not needed for probes.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// Response log to create or resume; defaults to evaluate/<model>.jsonl.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub probe: Option<ProbeArg>,
    /// CSV with `id,label` ground truth for the occupation probe.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub retries: usize,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Response log; repeat for several models.
    #[arg(long = "log", required = true)]
    pub logs: Vec<PathBuf>,
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub prompts: PathBuf,
    /// `MODEL=SERIES` assignments used for series-averaged heatmaps.
    #[arg(long = "series")]
    pub series: Vec<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    FullFt,
    LoraFt,
    PromptTune,
    Prune,
    PromptEngineer,
}

#[derive(Debug, Args)]
pub struct DebiasArgs {
    /// Overrides the method named in the config.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Adapter TOML of a trainable model; not needed for prompt engineering.
    #[arg(long)]
    pub adapter: Option<PathBuf>,
    /// Training images (JSONL).
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Prompt dump; train-split variants are used for training.
    #[arg(long)]
    pub prompts: PathBuf,
    /// Performance QA triples (JSONL) for pruning.
    #[arg(long)]
    pub qa: Option<PathBuf>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub ratio: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// analysis.json written by `analyze`.
    #[arg(long)]
    pub analysis: PathBuf,
    /// Model id of the original model for the debias table.
    #[arg(long)]
    pub baseline: Option<String>,
    /// CSV with `model,benchmark,score` rows from an external evaluation kit.
    #[arg(long)]
    pub benchmarks: Option<PathBuf>,
    /// Response logs for option-distribution panels (e.g. before and after).
    #[arg(long = "panel-log")]
    pub panel_logs: Vec<PathBuf>,
    /// Prompt dump joining panel logs to attributes.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// Images to draw panels for; defaults to the first two in the log.
    #[arg(long = "panel-image")]
    pub panel_images: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub analysis: PathBuf,
    /// Labor table CSV (`occupation,pct_female,source_table`); the shipped table by default.
    #[arg(long)]
    pub labor: Option<PathBuf>,
}
