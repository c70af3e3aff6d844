use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use semdiv_core::bradley_terry::TiePolicy;
use semdiv_core::dress::HeadPolicy;
use semdiv_core::CorpusFormat;

#[derive(Debug, Parser)]
#[command(name = "semdiv", version, about = "Semantic and lexical diversity metrics for response corpora")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dist-n, Ent-n and LF of a generated corpus.
    Metrics(MetricsArgs),
    /// Fit or apply k-means clusters over embeddings.
    #[command(subcommand)]
    Cluster(ClusterCommand),
    /// Sem-Ent of generated responses against training clusters.
    Sement(SementArgs),
    /// Export per-response focal weights for training.
    DressWeights(DressWeightsArgs),
    /// Train the toy model with and without DRESS on a skewed dataset.
    Simulate(SimulateArgs),
    /// Bradley-Terry analysis of pairwise judgements.
    #[command(subcommand)]
    Bt(BtCommand),
    /// Pearson and Spearman correlation between two score maps.
    Correlate(CorrelateArgs),
    /// Sem-Ent ranking stability across cluster counts.
    Robustness(RobustnessArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Tsv,
}

impl From<FormatArg> for CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => CorpusFormat::Jsonl,
            FormatArg::Tsv => CorpusFormat::Tsv,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HeadPolicyArg {
    AboveUniform,
    TopM,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TiesArg {
    Half,
    Drop,
}

impl From<TiesArg> for TiePolicy {
    fn from(t: TiesArg) -> Self {
        match t {
            TiesArg::Half => TiePolicy::Half,
            TiesArg::Drop => TiePolicy::Drop,
        }
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err("must be a finite non-negative number".into())
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v = non_negative_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err("must be positive".into())
    }
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Generated responses (JSONL or TSV).
    #[arg(long)]
    pub generated: PathBuf,
    /// Training responses; enables the LF metric.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Corpus format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// n-gram orders.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3", value_parser = positive)]
    pub ngrams: Vec<usize>,
    /// Training-count threshold below which a token is low-frequency.
    #[arg(long, default_value_t = semdiv_core::lexical::DEFAULT_LF_THRESHOLD)]
    pub lf_threshold: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct KMeansArgs {
    /// Number of clusters.
    #[arg(long, default_value_t = semdiv_core::clustering::DEFAULT_K, value_parser = positive)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = semdiv_core::clustering::DEFAULT_MAX_ITER, value_parser = positive)]
    pub max_iter: usize,
    #[arg(long, default_value_t = semdiv_core::clustering::DEFAULT_TOL, value_parser = positive_f64)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum ClusterCommand {
    /// Fit centroids on training embeddings and save the model.
    Fit(ClusterFitArgs),
    /// Assign embeddings to the nearest centroid of a saved model.
    Assign(ClusterAssignArgs),
}

#[derive(Debug, Args)]
pub struct ClusterFitArgs {
    #[arg(long)]
    pub train_emb: PathBuf,
    #[command(flatten)]
    pub kmeans: KMeansArgs,
    /// L2-normalize embedding rows before clustering.
    #[arg(long)]
    pub normalize: bool,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterAssignArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub emb: PathBuf,
    #[arg(long)]
    pub normalize: bool,
    /// Write the labels here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SementArgs {
    /// Training corpus; its length must match the training embeddings.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Training embeddings to fit clusters on.
    #[arg(long, required_unless_present = "model")]
    pub train_emb: Option<PathBuf>,
    /// Previously fitted model; replaces fitting on --train-emb.
    #[arg(long, conflicts_with_all = ["train_emb", "k", "seed", "max_iter", "tol"])]
    pub model: Option<PathBuf>,
    /// Embeddings of the generated responses.
    #[arg(long)]
    pub test_emb: PathBuf,
    /// Generated corpus; its length must match the test embeddings.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[command(flatten)]
    pub kmeans: KMeansArgs,
    #[arg(long)]
    pub normalize: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write an SVG bar chart of the cluster distribution.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeadArgs {
    /// How head clusters are chosen.
    #[arg(long, value_enum, default_value = "above-uniform")]
    pub head_policy: HeadPolicyArg,
    /// Number of head clusters under the top-m policy.
    #[arg(long, default_value_t = 5, value_parser = positive)]
    pub top_m: usize,
}

impl HeadArgs {
    pub fn policy(&self) -> HeadPolicy {
        match self.head_policy {
            HeadPolicyArg::AboveUniform => HeadPolicy::AboveUniform,
            HeadPolicyArg::TopM => HeadPolicy::TopM(self.top_m),
        }
    }
}

#[derive(Debug, Args)]
pub struct DressWeightsArgs {
    /// Training corpus; entry ids come from here.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long)]
    pub train_emb: PathBuf,
    /// Previously fitted model; replaces fitting on --train-emb.
    #[arg(long, conflicts_with_all = ["k", "seed", "max_iter", "tol"])]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub kmeans: KMeansArgs,
    #[arg(long)]
    pub normalize: bool,
    /// Focusing exponent of the focal weight.
    #[arg(long, default_value_t = semdiv_core::dress::DEFAULT_GAMMA, value_parser = non_negative_f64)]
    pub gamma: f64,
    /// Rescale positive weights to mean 1.
    #[arg(long)]
    pub renormalize: bool,
    /// Flag entries whose generated response lands in a head cluster.
    #[arg(long, requires = "gen_emb")]
    pub nt: bool,
    /// Embeddings of one generated response per training entry.
    #[arg(long)]
    pub gen_emb: Option<PathBuf>,
    #[command(flatten)]
    pub head: HeadArgs,
    /// Weight file (JSONL) to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the distribution report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 50, value_parser = positive)]
    pub contexts: usize,
    #[arg(long, default_value_t = 40, value_parser = positive)]
    pub templates: usize,
    #[arg(long, default_value_t = 8, value_parser = positive)]
    pub k: usize,
    /// Zipf exponent of the training cluster distribution.
    #[arg(long, default_value_t = 1.5)]
    pub skew: f64,
    /// Number of training pairs.
    #[arg(long, default_value_t = 1000, value_parser = positive)]
    pub size: usize,
    #[arg(long, default_value_t = 200, value_parser = positive)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5, value_parser = positive_f64)]
    pub lr: f64,
    #[arg(long, default_value_t = semdiv_core::dress::DEFAULT_GAMMA, value_parser = non_negative_f64)]
    pub gamma: f64,
    /// Negative training in the DRESS arm.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub nt: bool,
    #[command(flatten)]
    pub head: HeadArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the histories and summary.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write distribution.svg.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Subcommand)]
pub enum BtCommand {
    /// Fit item strengths from Likert pairwise annotations.
    Fit(BtFitArgs),
}

#[derive(Debug, Args)]
pub struct BtFitArgs {
    /// JSONL with fields a, b and likert (1..=5).
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, value_enum, default_value = "half")]
    pub ties: TiesArg,
    #[arg(long, default_value_t = semdiv_core::bradley_terry::DEFAULT_MAX_ITER, value_parser = positive)]
    pub max_iter: usize,
    #[arg(long, default_value_t = semdiv_core::bradley_terry::DEFAULT_TOL, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// JSON object mapping system names to scores.
    #[arg(long)]
    pub scores: PathBuf,
    /// JSON object mapping the same names to metric values.
    #[arg(long)]
    pub metric: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    /// Generated embeddings of one system; repeat for each system.
    #[arg(long, required = true)]
    pub emb: Vec<PathBuf>,
    /// System names, one per --emb; file stems by default.
    #[arg(long, value_delimiter = ',')]
    pub names: Vec<String>,
    #[arg(long)]
    pub train_emb: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "10,20,50,100", value_parser = positive)]
    pub ks: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = semdiv_core::clustering::DEFAULT_MAX_ITER, value_parser = positive)]
    pub max_iter: usize,
    #[arg(long, default_value_t = semdiv_core::clustering::DEFAULT_TOL, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long)]
    pub normalize: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
