use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "needminer",
    version,
    about = "Detect, categorize and quantify customer needs in tweets"
)]
pub struct Cli {
    /// Seed for every random choice (folds, sampling, forests).
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Also write the JSON result, with the arguments and seed, to this path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Print JSON instead of a table.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Pull tweets from a source into a store, keyword-filtered and deduplicated.
    Ingest(IngestArgs),
    /// Drop noisy tweets (links, retweets, bots, blocked authors).
    Filter(FilterArgs),
    /// Fold three rater labels per tweet into need / no-need / suspended.
    AggregateLabels(AggregateArgs),
    /// Fit one model on all labeled tweets and save it.
    Train(TrainArgs),
    /// k-fold cross-validation of fixed parameters.
    Evaluate(EvaluateArgs),
    /// Nested cross-validation with a parameter grid.
    NestedCv(NestedCvArgs),
    /// Mean F1 over growing stratified subsamples.
    LearningCurve(LearningCurveArgs),
    /// Intra- and cross-domain F1 for two labeled corpora.
    CrossDomain(CrossDomainArgs),
    /// One-vs-rest models for the eight need categories.
    TrainCategories(TrainCategoriesArgs),
    /// Category counts and shares per time bucket.
    Quantify(QuantifyArgs),
    /// Score texts with trained models.
    Classify(ClassifyArgs),
    /// Run ingestion, orchestration and the JSON API.
    Serve(ServeArgs),
    /// Render a saved evaluation report as a table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    NaiveBayes,
    RandomForest,
    PegasosSvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingArg {
    None,
    Oversample,
    Undersample,
    Smote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TweetFormatArg {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BucketArg {
    Day,
    Week,
    Month,
    Total,
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// Tweet file (JSONL or CSV).
    #[arg(long)]
    pub data: PathBuf,
    /// Rater labels (`tweet_id,labeler_id,label`) or aggregated labels
    /// (`tweet_id,verdict,votes_need`).
    #[arg(long)]
    pub labels: PathBuf,
    /// Tweet file format; guessed from the extension by default.
    #[arg(long, value_enum)]
    pub format: Option<TweetFormatArg>,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    /// Preprocessing config as JSON; the recommended syntactic pipeline by default.
    #[arg(long)]
    pub pipeline: Option<PathBuf>,
    /// Lexical resource for the semantic steps.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AlgoArgs {
    #[arg(long, value_enum, default_value = "naive-bayes")]
    pub algo: Algo,
    /// Naive Bayes smoothing.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Random forest: bag fraction p.
    #[arg(long)]
    pub bag_fraction: Option<f64>,
    /// Random forest: trees l.
    #[arg(long)]
    pub trees: Option<usize>,
    /// Random forest: features tried per split K.
    #[arg(long)]
    pub features: Option<usize>,
    /// Random forest: depth limit d; 0 means unlimited.
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Pegasos: regularization.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Pegasos: passes over the data.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SamplingArgs {
    #[arg(long, value_enum, default_value = "none")]
    pub sampling: SamplingArg,
    #[arg(long, default_value_t = 5)]
    pub smote_k: usize,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("src").args(["config", "file", "url"]).required(true)))]
pub struct IngestArgs {
    /// Service config providing source and store.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replay a JSONL tweet file.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Poll a JSON tweet endpoint once.
    #[arg(long)]
    pub url: Option<String>,
    /// Filter keyword; repeatable.
    #[arg(
        long = "keyword",
        required_unless_present = "config",
        conflicts_with = "config"
    )]
    pub keywords: Vec<String>,
    /// Store directory.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FilterArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<TweetFormatArg>,
    /// Where to write the kept tweets (JSONL).
    #[arg(long)]
    pub write: Option<PathBuf>,
    #[arg(long)]
    pub drop_urls: bool,
    #[arg(long)]
    pub drop_retweets: bool,
    #[arg(long)]
    pub max_per_author_day: Option<usize>,
    /// File with one author id per line.
    #[arg(long)]
    pub blocklist: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AggregateArgs {
    /// Rater labels CSV.
    #[arg(long)]
    pub labels: PathBuf,
    /// Where to write the aggregated labels CSV.
    #[arg(long)]
    pub write: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub algo: AlgoArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Model file to write.
    #[arg(long)]
    pub model: PathBuf,
    /// Register the model as the next `need` version in this registry.
    #[arg(long)]
    pub register: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub algo: AlgoArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct NestedCvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, value_enum, default_value = "naive-bayes")]
    pub algo: Algo,
    /// `default` or a JSON grid file.
    #[arg(long, default_value = "default")]
    pub grid: String,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, default_value_t = 5)]
    pub outer: usize,
    #[arg(long, default_value_t = 5)]
    pub inner: usize,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct LearningCurveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub algo: AlgoArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Strictly increasing subsample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CrossDomainArgs {
    #[arg(long)]
    pub data_a: PathBuf,
    #[arg(long)]
    pub labels_a: PathBuf,
    #[arg(long)]
    pub data_b: PathBuf,
    #[arg(long)]
    pub labels_b: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub algo: AlgoArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Keep both corpora at full size instead of subsampling the larger.
    #[arg(long)]
    pub no_size_match: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainCategoriesArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<TweetFormatArg>,
    /// `tweet_id,category` CSV; a tweet may appear once per category.
    #[arg(long)]
    pub category_labels: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, value_enum, default_value = "pegasos-svm")]
    pub algo: Algo,
    #[arg(long, default_value = "default")]
    pub grid: String,
    #[arg(long, default_value_t = 10)]
    pub outer: usize,
    #[arg(long, default_value_t = 5)]
    pub inner: usize,
    /// Directory for the per-category model files.
    #[arg(long)]
    pub models_dir: PathBuf,
    /// Register each model as the next version of its category role.
    #[arg(long)]
    pub register: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("input").args(["store", "data"]).required(true)))]
pub struct QuantifyArgs {
    /// Classified tweets in a service store.
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Tweet file, paired with --category-labels.
    #[arg(long, requires = "category_labels")]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<TweetFormatArg>,
    #[arg(long)]
    pub category_labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "total")]
    pub bucket: BucketArg,
    /// Window start (RFC 3339 or YYYY-MM-DD), inclusive.
    #[arg(long)]
    pub from: Option<String>,
    /// Window end, exclusive.
    #[arg(long)]
    pub to: Option<String>,
    /// Need threshold applied to stored scores.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("models").args(["model", "registry"]).required(true)))]
#[command(group(ArgGroup::new("texts").args(["text", "data"]).required(true)))]
pub struct ClassifyArgs {
    /// A single need model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// A registry with need and category models.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Text to classify; repeatable.
    #[arg(long)]
    pub text: Vec<String>,
    /// Tweet file to classify.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<TweetFormatArg>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    pub category_threshold: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    /// Service config; NEEDMINER_CONFIG or ./needminer.toml otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Evaluation report JSON, bare or as written by --out.
    #[arg(long)]
    pub input: PathBuf,
}
