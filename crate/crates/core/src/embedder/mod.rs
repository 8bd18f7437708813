//! Proximity-preserving embedding objectives: adjacency factorization,
//! Laplacian smoothness with penalties, and skip-gram with negative sampling
//! over random walks.
//!
//! Any objective that exposes a loss and a gradient on [`Embedding`] can be
//! combined with the curvature regularizer by the trainer.

mod le;
mod mf;
mod sgns;

pub use le::{le_loss_grad, LeTerms};
pub use mf::{mf_loss_grad, sample_non_edges, MfObjective};
pub use sgns::{
    build_sgns_corpus, sgns_batch_grad, sgns_batch_loss, sgns_step, SgnsBatch, SgnsCorpus,
    SgnsModel, SparseGrad, UNIGRAM_POWER,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{WalkConfig, WalkStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EmbedderKind {
    Mf,
    Le,
    Sgns { strategy: WalkStrategy },
}

impl EmbedderKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mf => "mf",
            Self::Le => "le",
            Self::Sgns { strategy: WalkStrategy::Uniform } => "deepwalk",
            Self::Sgns { .. } => "node2vec",
        }
    }

    /// Whether the objective is optimized full-batch (deterministic descent)
    /// rather than by stochastic passes.
    pub fn is_full_batch(&self) -> bool {
        !matches!(self, Self::Sgns { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedderParams {
    pub kind: EmbedderKind,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    /// Negatives per positive (skip-gram) or non-edges per edge (MF).
    pub k_neg: usize,
    /// Initial skip-gram learning rate, decayed linearly within a sub-loop.
    pub lr: f64,
    pub batch_size: usize,
    /// LE centering weight, in units of `n · max_degree`.
    pub le_beta: f64,
    /// LE second-moment weight, in units of `n · max_degree`. Tying the
    /// penalties to the largest degree keeps them on the scale of the
    /// smoothness term's curvature, so descent leaves the origin quickly.
    pub le_gamma: f64,
}

impl EmbedderParams {
    pub fn new(kind: EmbedderKind) -> Self {
        Self {
            kind,
            walks_per_node: 10,
            walk_length: 40,
            window: 5,
            k_neg: 5,
            lr: 0.025,
            batch_size: 64,
            le_beta: 1.0,
            le_gamma: 1.0,
        }
    }

    /// Walk settings; MF and LE runs use uniform walks for the walk
    /// regularizer.
    pub fn walk_config(&self) -> WalkConfig {
        let strategy = match self.kind {
            EmbedderKind::Sgns { strategy } => strategy,
            _ => WalkStrategy::Uniform,
        };
        WalkConfig { walks_per_node: self.walks_per_node, walk_length: self.walk_length, strategy }
    }

    pub fn validate(&self) -> Result<()> {
        self.walk_config().validate()?;
        if let EmbedderKind::Sgns { .. } = self.kind {
            if self.k_neg == 0 {
                return Err(Error::InvalidArgument("skip-gram needs at least one negative".into()));
            }
            if self.window == 0 {
                return Err(Error::InvalidArgument("window must be at least 1".into()));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive (got {})", self.lr)));
        }
        if self.le_beta < 0.0 || self.le_gamma < 0.0 {
            return Err(Error::InvalidArgument("LE penalty weights must be non-negative".into()));
        }
        Ok(())
    }
}
