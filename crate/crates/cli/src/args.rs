use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use curvreg::embedder::EmbedderKind;
use curvreg::graph::WalkStrategy;
use curvreg::regularizer::RegularizerKind;
use curvreg::seed;
use curvreg::trainer::TrainConfig;

#[derive(Debug, Parser)]
#[command(name = "curvreg", version, about = "Curvature-regularized graph embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Train an embedding and write it with its trace and metadata.
    Train(TrainArgs),
    /// Node classification accuracy over repeated 60/40 splits.
    EvalNc(EvalNcArgs),
    /// Link prediction MAP after removing a fraction of the edges.
    EvalLp(EvalLpArgs),
    /// Distortion and curvature statistics of an existing embedding.
    Distortion(DistortionArgs),
    /// Baseline vs regularized distortion on small synthetic graphs.
    CaseStudy(CaseStudyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mf,
    Le,
    Deepwalk,
    Node2vec,
}

/// Which curvature regularizer to apply: none, all shortest paths (c),
/// shortest paths between sampled nodes (s), or random walks (a).
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Reg {
    None,
    C,
    S,
    A,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphArgs {
    /// Edge list, one `u v` pair per line.
    #[arg(long)]
    pub edges: PathBuf,
    /// Keep every component instead of the largest one.
    #[arg(long)]
    pub no_lcc: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Method::Deepwalk)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = Reg::S)]
    pub reg: Reg,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    /// Alternating rounds before joint training.
    #[arg(long = "t", default_value_t = 3)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Walks started per node.
    #[arg(long, default_value_t = 10)]
    pub walks: usize,
    #[arg(long, default_value_t = 40)]
    pub walk_length: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Negatives per positive (skip-gram and matrix factorization).
    #[arg(long, default_value_t = 5)]
    pub neg: usize,
    /// node2vec return parameter.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// node2vec in-out parameter.
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Skip-gram learning rate.
    #[arg(long, default_value_t = 0.025)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// Nodes sampled for `--reg s`.
    #[arg(long, default_value_t = curvreg::regularizer::DEFAULT_SAMPLE_SIZE)]
    pub sample_size: usize,
    /// Redraw the node sample every round.
    #[arg(long)]
    pub resample: bool,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long)]
    pub max_epochs_embed: Option<usize>,
    #[arg(long)]
    pub max_epochs_omega: Option<usize>,
    #[arg(long)]
    pub max_epochs_joint: Option<usize>,
    /// Record sampled distortion every this many epochs (0 disables).
    #[arg(long, default_value_t = 0)]
    pub rho_every: usize,
    /// Binary cache for the regularizer's paths; reused when its key matches.
    #[arg(long)]
    pub path_cache: Option<PathBuf>,
}

impl ModelArgs {
    pub fn embedder_kind(&self) -> EmbedderKind {
        match self.method {
            Method::Mf => EmbedderKind::Mf,
            Method::Le => EmbedderKind::Le,
            Method::Deepwalk => EmbedderKind::Sgns { strategy: WalkStrategy::Uniform },
            Method::Node2vec => EmbedderKind::Sgns { strategy: WalkStrategy::Biased { p: self.p, q: self.q } },
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let mut cfg = TrainConfig::new(self.embedder_kind(), self.seed);
        let e = &mut cfg.embedder;
        e.walks_per_node = self.walks;
        e.walk_length = self.walk_length;
        e.window = self.window;
        e.k_neg = self.neg;
        e.lr = self.lr;
        e.batch_size = self.batch_size;
        cfg.regularizer = match self.reg {
            Reg::None => RegularizerKind::None,
            Reg::C => RegularizerKind::Full,
            Reg::S => RegularizerKind::Sampled {
                sample_size: self.sample_size,
                seed: seed::derive(self.seed, "regularizer-sample"),
            },
            Reg::A => RegularizerKind::Walk,
        };
        cfg.dim = self.dim;
        cfg.rounds = self.rounds;
        cfg.lambda = if self.reg == Reg::None { 0.0 } else { self.lambda };
        cfg.tol = self.tol;
        if let Some(v) = self.max_epochs_embed {
            cfg.max_epochs_embed = v;
        }
        if let Some(v) = self.max_epochs_omega {
            cfg.max_epochs_omega = v;
        }
        if let Some(v) = self.max_epochs_joint {
            cfg.max_epochs_joint = v;
        }
        cfg.resample_per_round = self.resample;
        cfg.rho_every = self.rho_every;
        cfg
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalNcArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Node labels, one `node label` pair per line.
    #[arg(long)]
    pub labels: PathBuf,
    /// Evaluate this embedding instead of training one.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// Row-to-token map of `--embedding`; defaults to its `.ids` sibling.
    #[arg(long)]
    pub ids: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = curvreg::evaluation::DEFAULT_NC_REPEATS)]
    pub repeats: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalLpArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Fraction of edges held out as test positives.
    #[arg(long, default_value_t = curvreg::evaluation::DEFAULT_REMOVAL)]
    pub removal: f64,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DistortionArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub ids: Option<PathBuf>,
    /// Sample this many ordered pairs instead of using all of them.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Nodes sampled for the curvature statistics.
    #[arg(long, default_value_t = curvreg::regularizer::DEFAULT_SAMPLE_SIZE)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write `distortion.json` here as well as printing it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseGraph {
    Path,
    Cycle,
    TwoCluster,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CaseStudyArgs {
    #[arg(long, value_enum, default_value_t = CaseGraph::All)]
    pub graph: CaseGraph,
    /// Nodes per synthetic graph.
    #[arg(long, default_value_t = 40)]
    pub nodes: usize,
    /// Node pairs in the scatter output.
    #[arg(long, default_value_t = 500)]
    pub pairs: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}
