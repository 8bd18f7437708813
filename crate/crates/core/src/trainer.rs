//! Two-phase training: `t` rounds alternating between minimizing the
//! embedding loss and minimizing the curvature penalty, each to convergence,
//! then joint minimization of `L + λ·Ω`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedder::{build_sgns_corpus, le_loss_grad, EmbedderKind, EmbedderParams, MfObjective, SgnsModel};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::geometry::{condition_pass_fraction, distortion, sample_pairs};
use crate::graph::{random_walks, Graph, PathSet};
use crate::regularizer::{build_state, omega_loss, omega_loss_grad, RegularizerKind, RegularizerState};
use crate::seed;

/// Floor on the denominator of the relative-change test.
pub const CONVERGENCE_EPS: f64 = 1e-12;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 80;

/// True when the last two losses differ by less than `tol` relative to the
/// earlier one. Histories shorter than two entries never converge.
pub fn convergence_check(history: &[f64], tol: f64) -> bool {
    match history {
        [.., prev, cur] => (cur - prev).abs() / prev.abs().max(CONVERGENCE_EPS) < tol,
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub embedder: EmbedderParams,
    pub regularizer: RegularizerKind,
    pub dim: usize,
    /// Number of alternating rounds before joint training.
    pub rounds: usize,
    pub lambda: f64,
    /// Relative loss-change tolerance shared by all sub-loops.
    pub tol: f64,
    pub max_epochs_embed: usize,
    pub max_epochs_omega: usize,
    pub max_epochs_joint: usize,
    pub seed: u64,
    /// Redraw the sampled node set at the start of every round.
    pub resample_per_round: bool,
    /// Record sampled distortion every this many epochs (0 disables).
    pub rho_every: usize,
    pub rho_pairs: usize,
}

impl TrainConfig {
    /// Defaults for `kind`. Full-batch objectives get 200 epochs per
    /// sub-loop and 500 joint; skip-gram passes are far more expensive, so
    /// it gets 5 and 10.
    pub fn new(kind: EmbedderKind, seed: u64) -> Self {
        let (embed, joint) = if kind.is_full_batch() { (200, 500) } else { (5, 10) };
        Self {
            embedder: EmbedderParams::new(kind),
            regularizer: RegularizerKind::Sampled {
                sample_size: crate::regularizer::DEFAULT_SAMPLE_SIZE,
                seed: seed::derive(seed, "regularizer-sample"),
            },
            dim: 64,
            rounds: 3,
            lambda: 0.1,
            tol: 1e-4,
            max_epochs_embed: embed,
            max_epochs_omega: 200,
            max_epochs_joint: joint,
            seed,
            resample_per_round: false,
            rho_every: 0,
            rho_pairs: 2000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.embedder.validate()?;
        if self.dim < 2 {
            return Err(Error::InvalidArgument(format!("dimension must be at least 2 (got {})", self.dim)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be non-negative (got {})", self.lambda)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("tolerance must be positive (got {})", self.tol)));
        }
        Ok(())
    }

    fn regularized(&self) -> bool {
        !self.regularizer.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Phase1Embed,
    Phase1Omega,
    Phase2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub epoch: usize,
    pub phase: Phase,
    /// Phase-1 round, absent in phase 2.
    pub round: Option<usize>,
    pub embedding_loss: Option<f64>,
    pub omega_loss: Option<f64>,
    pub joint_loss: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub stage: String,
    pub omega_loss: Option<f64>,
    /// Fraction of cached paths passing the turning-angle condition.
    pub condition_pass_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    pub checkpoints: Vec<Checkpoint>,
    pub init: String,
    /// Content hash of the regularizer's path cache.
    pub path_cache_hash: Option<u64>,
}

impl TrainTrace {
    pub fn checkpoint(&self, stage: &str) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.stage == stage)
    }

    /// Omega values of each phase-1 penalty sub-loop, one vector per round.
    pub fn omega_subloops(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
        for r in self.records.iter().filter(|r| r.phase == Phase::Phase1Omega) {
            let round = r.round.unwrap_or(0);
            match out.last_mut() {
                Some((k, v)) if *k == round => v.extend(r.omega_loss),
                _ => out.push((round, r.omega_loss.into_iter().collect())),
            }
        }
        out.into_iter().map(|(_, v)| v).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub embedding: Embedding,
    pub trace: TrainTrace,
    /// Skip-gram context matrix, when that embedder was used.
    pub contexts: Option<Embedding>,
}

enum Model {
    Mf(MfObjective),
    Le { beta: f64, gamma: f64 },
    Sgns(Box<SgnsModel>),
}

/// Backtracking gradient descent that remembers its last accepted step.
struct Descent {
    step: f64,
}

impl Descent {
    fn new() -> Self {
        Self { step: 1.0 }
    }

    /// Try `x - t·g` with halving `t` until the Armijo condition holds.
    /// Returns the new loss, or `None` when no decreasing step was found.
    fn step(
        &mut self,
        x: &mut Embedding,
        f0: f64,
        g: &Embedding,
        mut f: impl FnMut(&Embedding) -> Result<f64>,
    ) -> Result<Option<f64>> {
        let gg = g.norm_squared();
        if gg == 0.0 || !gg.is_finite() {
            return Ok(None);
        }
        let mut t = self.step;
        for _ in 0..MAX_HALVINGS {
            let cand = x.plus_scaled(g, -t);
            let f1 = match f(&cand) {
                Ok(v) => v,
                Err(Error::EmptyRegularizer { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if f1.is_finite() && f1 <= f0 - ARMIJO * t * gg {
                *x = cand;
                self.step = t * 2.0;
                return Ok(Some(f1));
            }
            t *= 0.5;
        }
        Ok(None)
    }
}

/// Path generation and training state for one run.
pub struct Trainer<'g> {
    graph: &'g Graph,
    cfg: TrainConfig,
    walks: Option<Arc<PathSet>>,
    reg: Option<RegularizerState>,
}

impl<'g> Trainer<'g> {
    pub fn new(graph: &'g Graph, cfg: TrainConfig) -> Result<Self> {
        Self::with_paths(graph, cfg, None)
    }

    /// Like [`Trainer::new`] but reuses a precomputed regularizer path set
    /// (e.g. loaded from a cache). For the walk regularizer with the
    /// skip-gram embedder the same set also feeds the corpus.
    pub fn with_paths(graph: &'g Graph, cfg: TrainConfig, paths: Option<Arc<PathSet>>) -> Result<Self> {
        cfg.validate()?;
        let walk_cfg = cfg.embedder.walk_config();
        let walk_seed = seed::derive(cfg.seed, "walks");
        let needs_walks = matches!(cfg.embedder.kind, EmbedderKind::Sgns { .. })
            || cfg.regularizer == RegularizerKind::Walk;
        let walks = match (&paths, cfg.regularizer) {
            (Some(p), RegularizerKind::Walk) => Some(p.clone()),
            _ if needs_walks => Some(Arc::new(random_walks(graph, &walk_cfg, walk_seed)?)),
            _ => None,
        };
        let reg = match (cfg.regularizer, paths) {
            (RegularizerKind::None, _) => None,
            (kind, Some(p)) => Some(RegularizerState { kind, paths: p }),
            (kind, None) => Some(build_state(graph, kind, &walk_cfg, walk_seed, walks.clone())?),
        };
        Ok(Self { graph, cfg, walks, reg })
    }

    pub fn regularizer(&self) -> Option<&RegularizerState> {
        self.reg.as_ref()
    }

    pub fn walks(&self) -> Option<&Arc<PathSet>> {
        self.walks.as_ref()
    }

    pub fn run(self) -> Result<TrainOutput> {
        Run::start(self)?.train()
    }
}

/// Train with the two-phase schedule described in the module docs.
pub fn two_phase_train(graph: &Graph, cfg: &TrainConfig) -> Result<TrainOutput> {
    Trainer::new(graph, cfg.clone())?.run()
}

/// Train the embedding objective alone with the same seeds (no phase 1, no
/// penalty). Equivalent to `two_phase_train` with no regularizer.
pub fn train_embedder(graph: &Graph, cfg: &TrainConfig) -> Result<TrainOutput> {
    let mut plain = cfg.clone();
    plain.regularizer = RegularizerKind::None;
    plain.lambda = 0.0;
    two_phase_train(graph, &plain)
}

pub fn initial_embedding(n: usize, d: usize, seed: u64) -> Embedding {
    let half = 0.5 / d as f64;
    let mut rng = seed::rng(seed);
    let data = (0..n * d).map(|_| rng.gen_range(-half..half)).collect();
    Embedding::from_vec(n, d, data).expect("shape matches")
}

struct Run<'g> {
    graph: &'g Graph,
    cfg: TrainConfig,
    reg: Option<RegularizerState>,
    model: Model,
    x: Embedding,
    rng: seed::Rng,
    epoch: usize,
    rho_pairs: Vec<(usize, usize)>,
    trace: TrainTrace,
}

impl<'g> Run<'g> {
    fn start(t: Trainer<'g>) -> Result<Self> {
        let Trainer { graph, cfg, walks, reg } = t;
        let n = graph.n();
        let p = &cfg.embedder;
        let model = match p.kind {
            EmbedderKind::Mf => Model::Mf(MfObjective::new(graph, p.k_neg, seed::derive(cfg.seed, "mf-negatives"))),
            EmbedderKind::Le => {
                let scale = (n * (0..n).map(|v| graph.degree(v)).max().unwrap_or(1).max(1)) as f64;
                Model::Le { beta: p.le_beta * scale, gamma: p.le_gamma * scale }
            }
            EmbedderKind::Sgns { .. } => {
                let walks = walks.as_ref().expect("walks are generated for skip-gram");
                let corpus = build_sgns_corpus(walks, n, p.window)?;
                Model::Sgns(Box::new(SgnsModel::new(corpus, n, cfg.dim, p.k_neg, p.batch_size)))
            }
        };
        let x = initial_embedding(n, cfg.dim, seed::derive(cfg.seed, "init"));
        let rho_pairs = if cfg.rho_every > 0 {
            sample_pairs(n, cfg.rho_pairs, seed::derive(cfg.seed, "rho-pairs"))
        } else {
            Vec::new()
        };
        let half = 0.5 / cfg.dim as f64;
        let trace = TrainTrace {
            records: Vec::new(),
            checkpoints: Vec::new(),
            init: format!("uniform[-{half}, {half}]"),
            path_cache_hash: reg.as_ref().map(|r| r.paths.content_hash()),
        };
        Ok(Self { graph, rng: seed::rng(seed::derive(cfg.seed, "sgns")), cfg, reg, model, x, epoch: 0, rho_pairs, trace })
    }

    fn train(mut self) -> Result<TrainOutput> {
        self.checkpoint("init")?;
        if self.cfg.regularized() {
            for round in 0..self.cfg.rounds {
                if round > 0 && self.cfg.resample_per_round {
                    self.resample(round)?;
                }
                self.embed_subloop(round)?;
                self.omega_subloop(round)?;
                self.checkpoint(&format!("round_{round}"))?;
            }
            if self.cfg.rounds > 0 {
                self.checkpoint("after_phase1")?;
            }
        }
        self.joint()?;
        self.checkpoint("final")?;
        let contexts = match self.model {
            Model::Sgns(m) => Some(m.contexts),
            _ => None,
        };
        Ok(TrainOutput { embedding: self.x, trace: self.trace, contexts })
    }

    fn resample(&mut self, round: usize) -> Result<()> {
        if let RegularizerKind::Sampled { sample_size, seed } = self.cfg.regularizer {
            let kind = RegularizerKind::Sampled { sample_size, seed: seed::derive_index(seed, round as u64) };
            let walk = self.cfg.embedder.walk_config();
            self.reg = Some(build_state(self.graph, kind, &walk, 0, None)?);
        }
        Ok(())
    }

    fn checkpoint(&mut self, stage: &str) -> Result<()> {
        let Some(reg) = &self.reg else { return Ok(()) };
        let omega = omega_loss(&self.x, reg).ok().map(|o| o.loss);
        let frac = condition_pass_fraction(&self.x, &reg.paths);
        self.trace.checkpoints.push(Checkpoint {
            stage: stage.to_owned(),
            omega_loss: omega,
            condition_pass_fraction: frac,
        });
        Ok(())
    }

    fn record(&mut self, phase: Phase, round: Option<usize>, embed: Option<f64>, omega: Option<f64>, joint: Option<f64>) -> Result<()> {
        for (what, v) in [("embedding", embed), ("curvature", omega), ("joint", joint)] {
            if v.is_some_and(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what, epoch: self.epoch });
            }
        }
        let rho = if self.cfg.rho_every > 0 && self.epoch.is_multiple_of(self.cfg.rho_every) && !self.rho_pairs.is_empty() {
            distortion(&self.x, self.graph, Some(&self.rho_pairs)).ok().map(|r| r.rho)
        } else {
            None
        };
        self.trace.records.push(TraceRecord {
            epoch: self.epoch,
            phase,
            round,
            embedding_loss: embed,
            omega_loss: omega,
            joint_loss: joint,
            rho,
        });
        self.epoch += 1;
        Ok(())
    }

    fn embed_loss_grad(&self, x: &Embedding) -> (f64, Embedding) {
        match &self.model {
            Model::Mf(m) => m.loss_grad(x, self.graph),
            Model::Le { beta, gamma } => {
                let (t, g) = le_loss_grad(x, self.graph, *beta, *gamma);
                (t.total(), g)
            }
            Model::Sgns(_) => unreachable!("skip-gram is trained by stochastic passes"),
        }
    }

    fn embed_loss(&self, x: &Embedding) -> f64 {
        self.embed_loss_grad(x).0
    }

    fn sgns_lr(&self, epoch: usize, cap: usize) -> f64 {
        let lr0 = self.cfg.embedder.lr;
        lr0 * (1.0 - epoch as f64 / cap.max(1) as f64).max(1e-4)
    }

    fn sgns_epoch(&mut self, lr: f64) -> f64 {
        let Model::Sgns(m) = &mut self.model else { unreachable!() };
        let total = m.epoch(&mut self.x, lr, &mut self.rng);
        total / m.corpus.pairs.len().max(1) as f64
    }

    fn embed_subloop(&mut self, round: usize) -> Result<()> {
        let cap = self.cfg.max_epochs_embed;
        let mut hist = Vec::new();
        if let Model::Sgns(_) = self.model {
            for e in 0..cap {
                let lr = self.sgns_lr(e, cap);
                let l = self.sgns_epoch(lr);
                hist.push(l);
                self.record(Phase::Phase1Embed, Some(round), Some(l), None, None)?;
                if convergence_check(&hist, self.cfg.tol) {
                    break;
                }
            }
            return Ok(());
        }
        let mut descent = Descent::new();
        let (mut loss, mut grad) = self.embed_loss_grad(&self.x);
        hist.push(loss);
        for _ in 0..cap {
            let mut x = self.x.clone();
            let Some(l) = descent.step(&mut x, loss, &grad, |y| Ok(self.embed_loss(y)))? else { break };
            self.x = x;
            hist.push(l);
            self.record(Phase::Phase1Embed, Some(round), Some(l), None, None)?;
            if convergence_check(&hist, self.cfg.tol) {
                break;
            }
            (loss, grad) = self.embed_loss_grad(&self.x);
        }
        Ok(())
    }

    fn omega_subloop(&mut self, round: usize) -> Result<()> {
        let reg = self.reg.clone().expect("phase 1 runs only with a regularizer");
        let mut descent = Descent::new();
        let (o, mut grad) = omega_loss_grad(&self.x, &reg)?;
        let mut loss = o.loss;
        let mut hist = vec![loss];
        for _ in 0..self.cfg.max_epochs_omega {
            let mut x = self.x.clone();
            let Some(l) = descent.step(&mut x, loss, &grad, |y| omega_loss(y, &reg).map(|o| o.loss))? else { break };
            self.x = x;
            hist.push(l);
            self.record(Phase::Phase1Omega, Some(round), None, Some(l), None)?;
            if convergence_check(&hist, self.cfg.tol) {
                break;
            }
            let (o, g) = omega_loss_grad(&self.x, &reg)?;
            loss = o.loss;
            grad = g;
        }
        Ok(())
    }

    fn joint(&mut self) -> Result<()> {
        let lambda = self.cfg.lambda;
        let reg = self.reg.clone().filter(|_| lambda > 0.0);
        let cap = self.cfg.max_epochs_joint;
        let mut hist = Vec::new();

        if let Model::Sgns(_) = self.model {
            for e in 0..cap {
                let lr = self.sgns_lr(e, cap);
                let l = self.sgns_epoch(lr);
                let omega = match &reg {
                    Some(reg) => Some(self.omega_nudge(reg, lr * lambda)?),
                    None => None,
                };
                let pairs = match &self.model {
                    Model::Sgns(m) => m.corpus.pairs.len() as f64,
                    _ => unreachable!(),
                };
                let joint = l * pairs + omega.map_or(0.0, |o| lambda * o);
                hist.push(joint);
                self.record(Phase::Phase2, None, Some(l), omega, Some(joint))?;
                if convergence_check(&hist, self.cfg.tol) {
                    break;
                }
            }
            return Ok(());
        }

        let joint_of = |run: &Self, y: &Embedding| -> Result<(f64, f64, Option<f64>, Embedding)> {
            let (l, mut g) = run.embed_loss_grad(y);
            match &reg {
                Some(reg) => {
                    let (o, og) = omega_loss_grad(y, reg)?;
                    g.add_scaled(&og, lambda);
                    Ok((l + lambda * o.loss, l, Some(o.loss), g))
                }
                None => Ok((l, l, None, g)),
            }
        };
        let mut descent = Descent::new();
        let (mut j, _, _, mut grad) = joint_of(self, &self.x)?;
        hist.push(j);
        for _ in 0..cap {
            let mut x = self.x.clone();
            let value = |y: &Embedding| -> Result<f64> {
                let l = self.embed_loss(y);
                match &reg {
                    Some(reg) => Ok(l + lambda * omega_loss(y, reg)?.loss),
                    None => Ok(l),
                }
            };
            let Some(_) = descent.step(&mut x, j, &grad, value)? else { break };
            self.x = x;
            let (nj, l, o, g) = joint_of(self, &self.x)?;
            j = nj;
            grad = g;
            hist.push(j);
            self.record(Phase::Phase2, None, Some(l), o, Some(j))?;
            if convergence_check(&hist, self.cfg.tol) {
                break;
            }
        }
        Ok(())
    }

    /// One penalty step of size `rate` after a stochastic pass, halved until
    /// the penalty does not increase. Returns the resulting penalty.
    fn omega_nudge(&mut self, reg: &RegularizerState, rate: f64) -> Result<f64> {
        let (o, g) = omega_loss_grad(&self.x, reg)?;
        let mut t = rate;
        for _ in 0..30 {
            let cand = self.x.plus_scaled(&g, -t);
            if let Ok(o1) = omega_loss(&cand, reg) {
                if o1.loss <= o.loss {
                    self.x = cand;
                    return Ok(o1.loss);
                }
            }
            t *= 0.5;
        }
        Ok(o.loss)
    }
}
