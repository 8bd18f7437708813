//! Downstream tasks: node classification and link prediction.

mod logreg;

pub use logreg::{
    logistic_loss_grad, train_logistic, train_logreg_ovr, Logistic, OvrClassifier, GRAD_TOL, L2,
    MAX_EPOCHS,
};

use std::collections::HashSet;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelMap};
use crate::seed;
use crate::trainer::{two_phase_train, TrainConfig};

pub const TRAIN_FRACTION: f64 = 0.6;
pub const DEFAULT_REMOVAL: f64 = 0.4;
pub const DEFAULT_NC_REPEATS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    NodeClassification,
    LinkPrediction,
}

/// Metric for a single split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitResult {
    pub seed: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub task: Task,
    pub metric: &'static str,
    /// Mean over splits.
    pub value: f64,
    /// Sample standard deviation over splits; zero for a single split.
    pub std_dev: f64,
    pub seed: u64,
    pub splits: Vec<SplitResult>,
    /// Node classification: test accuracy per class, pooled over splits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class: Option<Vec<Option<f64>>>,
    /// Link prediction: test positives and negatives per split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_pairs: Option<(usize, usize)>,
}

impl EvalReport {
    fn from_splits(task: Task, metric: &'static str, seed: u64, splits: Vec<SplitResult>) -> Self {
        let k = splits.len() as f64;
        let value = splits.iter().map(|s| s.value).sum::<f64>() / k;
        let std_dev = if splits.len() > 1 {
            (splits.iter().map(|s| (s.value - value).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { task, metric, value, std_dev, seed, splits, per_class: None, test_pairs: None }
    }
}

/// Uniform train/test split of the labelled nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NcSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// 60/40 split of the labelled nodes, no stratification. Both halves come
/// back sorted.
pub fn make_nc_split(labels: &LabelMap, seed: u64) -> Result<NcSplit> {
    if labels.is_empty() {
        return Err(Error::EmptyLabels);
    }
    let mut counts = vec![0usize; labels.num_classes()];
    for (_, c) in labels.iter() {
        counts[c] += 1;
    }
    for (c, &k) in counts.iter().enumerate() {
        if k < 2 {
            warn!("class `{}` has {k} labelled node(s)", labels.class_name(c));
        }
    }
    let mut nodes = labels.nodes();
    nodes.shuffle(&mut seed::rng(seed));
    let k = (TRAIN_FRACTION * nodes.len() as f64).round() as usize;
    let mut test = nodes.split_off(k);
    nodes.sort_unstable();
    test.sort_unstable();
    Ok(NcSplit { train: nodes, test, seed })
}

fn gather(emb: &Embedding, nodes: &[usize]) -> Embedding {
    let mut out = Embedding::zeros(nodes.len(), emb.dim());
    for (r, &v) in nodes.iter().enumerate() {
        out.row_mut(r).copy_from_slice(emb.row(v));
    }
    out
}

/// Accuracy on `split.test` of a one-vs-rest classifier fit on
/// `split.train`, plus `(correct, total)` per class.
pub fn nc_split_accuracy(
    emb: &Embedding,
    labels: &LabelMap,
    split: &NcSplit,
) -> Result<(f64, Vec<(usize, usize)>)> {
    for &v in split.train.iter().chain(&split.test) {
        if v >= emb.n() {
            return Err(Error::NodeOutOfRange { id: v, n: emb.n() });
        }
    }
    let class_of = |v: usize| labels.get(v).ok_or_else(|| Error::InvalidArgument(format!("node {v} is unlabelled")));
    let y: Vec<usize> = split.train.iter().map(|&v| class_of(v)).collect::<Result<_>>()?;
    let clf = train_logreg_ovr(&gather(emb, &split.train), &y, labels.num_classes())?;
    let mut per_class = vec![(0, 0); labels.num_classes()];
    let mut correct = 0;
    for &v in &split.test {
        let c = class_of(v)?;
        per_class[c].1 += 1;
        if clf.predict(emb.row(v)) == c {
            correct += 1;
            per_class[c].0 += 1;
        }
    }
    let acc = if split.test.is_empty() { 0.0 } else { correct as f64 / split.test.len() as f64 };
    Ok((acc, per_class))
}

/// Mean test accuracy over `repeats` independent splits.
pub fn nc_accuracy(emb: &Embedding, labels: &LabelMap, repeats: usize, seed: u64) -> Result<EvalReport> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be positive".into()));
    }
    let mut splits = Vec::with_capacity(repeats);
    let mut pooled = vec![(0, 0); labels.num_classes()];
    for r in 0..repeats {
        let split_seed = seed::derive_index(seed, r as u64);
        let split = make_nc_split(labels, split_seed)?;
        let (acc, per_class) = nc_split_accuracy(emb, labels, &split)?;
        for (p, q) in pooled.iter_mut().zip(per_class) {
            p.0 += q.0;
            p.1 += q.1;
        }
        splits.push(SplitResult { seed: split_seed, value: acc });
    }
    let mut report = EvalReport::from_splits(Task::NodeClassification, "accuracy", seed, splits);
    report.per_class =
        Some(pooled.iter().map(|&(c, t)| (t > 0).then(|| c as f64 / t as f64)).collect());
    Ok(report)
}

/// Edge-removal split for link prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSplit {
    /// All `n` nodes, minus the removed edges.
    pub train_graph: Graph,
    pub test_positives: Vec<(usize, usize)>,
    pub test_negatives: Vec<(usize, usize)>,
    pub seed: u64,
}

fn normalize((a, b): (usize, usize)) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Draw `count` distinct non-edges of `graph` avoiding `exclude`, uniformly.
fn sample_non_edges(
    graph: &Graph,
    count: usize,
    exclude: &HashSet<(usize, usize)>,
    rng: &mut seed::Rng,
) -> Result<Vec<(usize, usize)>> {
    let n = graph.n();
    let pool = (n * n.saturating_sub(1) / 2)
        .saturating_sub(graph.num_edges())
        .saturating_sub(exclude.len());
    if pool < count {
        return Err(Error::NegativePoolTooSmall { available: pool, needed: count });
    }
    if pool < 2 * count {
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| !graph.has_edge(a, b) && !exclude.contains(&(a, b)))
            .collect();
        all.shuffle(rng);
        all.truncate(count);
        all.sort_unstable();
        return Ok(all);
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let e = normalize((a, b));
        if graph.has_edge(e.0, e.1) || exclude.contains(&e) || !seen.insert(e) {
            continue;
        }
        out.push(e);
    }
    out.sort_unstable();
    Ok(out)
}

/// Remove `⌊frac·|E|⌋` edges uniformly and pair them with as many non-edges
/// of the original graph. No connectivity repair is attempted.
pub fn make_lp_split(graph: &Graph, removal_frac: f64, seed: u64) -> Result<LpSplit> {
    if !(removal_frac > 0.0 && removal_frac < 1.0) {
        return Err(Error::InvalidArgument(format!("removal fraction must lie in (0, 1), got {removal_frac}")));
    }
    let mut rng = seed::rng(seed);
    let k = (removal_frac * graph.num_edges() as f64).floor() as usize;
    if k == 0 {
        return Err(Error::NoPositives);
    }
    let mut edges = graph.edges().to_vec();
    edges.shuffle(&mut rng);
    let mut test_positives = edges.split_off(edges.len() - k);
    test_positives.sort_unstable();
    let test_negatives = sample_non_edges(graph, k, &HashSet::new(), &mut rng)?;
    let train_graph = graph.with_edges(edges)?;
    Ok(LpSplit { train_graph, test_positives, test_negatives, seed })
}

/// Row `r` is `x_a ⊙ x_b` for the `r`-th pair.
pub fn hadamard_features(emb: &Embedding, pairs: &[(usize, usize)]) -> Result<Embedding> {
    let mut out = Embedding::zeros(pairs.len(), emb.dim());
    for (r, &(a, b)) in pairs.iter().enumerate() {
        for id in [a, b] {
            if id >= emb.n() {
                return Err(Error::NodeOutOfRange { id, n: emb.n() });
            }
        }
        let (xa, xb) = (emb.row(a), emb.row(b));
        for ((o, u), v) in out.row_mut(r).iter_mut().zip(xa).zip(xb) {
            *o = u * v;
        }
    }
    Ok(out)
}

/// Average precision of the ranking by descending score. Ties keep input
/// order.
pub fn mean_average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { left: scores.len(), right: labels.len() });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Score `split`'s test pairs with a logistic model on Hadamard features,
/// fit on the training graph's edges against an equal number of fresh
/// non-edges, and return the test MAP.
pub fn lp_split_map(emb: &Embedding, original: &Graph, split: &LpSplit) -> Result<f64> {
    let train_pos = split.train_graph.edges().to_vec();
    if train_pos.is_empty() {
        return Err(Error::NoPositives);
    }
    let exclude: HashSet<(usize, usize)> = split.test_negatives.iter().copied().collect();
    let mut rng = seed::rng(seed::derive(split.seed, "lp-train-negatives"));
    let train_neg = sample_non_edges(original, train_pos.len(), &exclude, &mut rng)?;
    let pairs: Vec<(usize, usize)> = train_pos.iter().chain(&train_neg).copied().collect();
    let y: Vec<bool> = (0..pairs.len()).map(|i| i < train_pos.len()).collect();
    let model = train_logistic(&hadamard_features(emb, &pairs)?, &y)?;
    let test: Vec<(usize, usize)> =
        split.test_positives.iter().chain(&split.test_negatives).copied().collect();
    let feats = hadamard_features(emb, &test)?;
    let scores: Vec<f64> = feats.rows().map(|r| model.decision(r)).collect();
    let labels: Vec<bool> = (0..test.len()).map(|i| i < split.test_positives.len()).collect();
    mean_average_precision(&scores, &labels)
}

/// Split, embed the training graph with `cfg`, and report the test MAP.
pub fn lp_evaluate(graph: &Graph, cfg: &TrainConfig, removal_frac: f64, seed: u64) -> Result<EvalReport> {
    lp_evaluate_repeats(graph, cfg, removal_frac, 1, seed)
}

/// [`lp_evaluate`] over `repeats` removal seeds derived from `seed`.
pub fn lp_evaluate_repeats(
    graph: &Graph,
    cfg: &TrainConfig,
    removal_frac: f64,
    repeats: usize,
    seed: u64,
) -> Result<EvalReport> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be positive".into()));
    }
    let mut splits = Vec::with_capacity(repeats);
    let mut test_pairs = (0, 0);
    for r in 0..repeats {
        let split_seed = if repeats == 1 { seed } else { seed::derive_index(seed, r as u64) };
        let split = make_lp_split(graph, removal_frac, split_seed)?;
        test_pairs = (split.test_positives.len(), split.test_negatives.len());
        let out = two_phase_train(&split.train_graph, cfg)?;
        let map = lp_split_map(&out.embedding, graph, &split)?;
        splits.push(SplitResult { seed: split_seed, value: map });
    }
    let mut report = EvalReport::from_splits(Task::LinkPrediction, "map", seed, splits);
    report.test_pairs = Some(test_pairs);
    Ok(report)
}
