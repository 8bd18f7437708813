use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::PathSet;

/// Center/context pairs from windowed walks plus the negative-sampling
/// distribution (occurrence counts raised to 0.75, normalized).
#[derive(Debug, Clone)]
pub struct SgnsCorpus {
    pub pairs: Vec<(usize, usize)>,
    pub unigram: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

pub const UNIGRAM_POWER: f64 = 0.75;

pub fn build_sgns_corpus(walks: &PathSet, n: usize, window: usize) -> Result<SgnsCorpus> {
    if walks.is_empty() {
        return Err(Error::InvalidArgument("skip-gram corpus needs at least one walk".into()));
    }
    if window == 0 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    let mut counts = vec![0usize; n];
    let mut pairs = Vec::new();
    for walk in walks.iter() {
        let nodes = walk.nodes();
        for (i, &c) in nodes.iter().enumerate() {
            counts[c] += 1;
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(nodes.len() - 1);
            for (j, &o) in nodes.iter().enumerate().take(hi + 1).skip(lo) {
                if j != i {
                    pairs.push((c, o));
                }
            }
        }
    }
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(UNIGRAM_POWER)).collect();
    let total: f64 = weights.iter().sum();
    let unigram = weights.iter().map(|w| w / total).collect();
    let sampler = WeightedIndex::new(&weights)
        .map_err(|e| Error::InvalidArgument(format!("unigram table: {e}")))?;
    Ok(SgnsCorpus { pairs, unigram, sampler })
}

impl SgnsCorpus {
    /// One negative for the pair `(c, o)`, never `c` or `o` itself. Gives up
    /// after a bounded number of rejections (tiny vocabularies).
    pub fn draw_negative<R: Rng>(&self, c: usize, o: usize, rng: &mut R) -> Option<usize> {
        (0..64).map(|_| self.sampler.sample(rng)).find(|&v| v != c && v != o)
    }
}

/// A batch of pairs with their negatives fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsBatch {
    pub pairs: Vec<(usize, usize)>,
    pub negatives: Vec<Vec<usize>>,
}

impl SgnsBatch {
    pub fn draw<R: Rng>(corpus: &SgnsCorpus, indices: &[usize], k_neg: usize, rng: &mut R) -> Self {
        let pairs: Vec<(usize, usize)> = indices.iter().map(|&i| corpus.pairs[i]).collect();
        let negatives = pairs
            .iter()
            .map(|&(c, o)| (0..k_neg).filter_map(|_| corpus.draw_negative(c, o, rng)).collect())
            .collect();
        Self { pairs, negatives }
    }
}

/// `-log σ(s)`, stable for large |s|.
#[inline]
fn neg_log_sigmoid(s: f64) -> f64 {
    if s > 0.0 {
        (-s).exp().ln_1p()
    } else {
        -s + s.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Batch loss `Σ_pairs [-log σ(⟨x_c, y_o⟩) - Σ_neg log σ(-⟨x_c, y_n⟩)]`.
pub fn sgns_batch_loss(centers: &Embedding, contexts: &Embedding, batch: &SgnsBatch) -> f64 {
    batch
        .pairs
        .iter()
        .zip(&batch.negatives)
        .map(|(&(c, o), negs)| {
            let xc = centers.row(c);
            neg_log_sigmoid(dot(xc, contexts.row(o)))
                + negs.iter().map(|&n| neg_log_sigmoid(-dot(xc, contexts.row(n)))).sum::<f64>()
        })
        .sum()
}

/// Gradient accumulator that only clears the rows it touched.
#[derive(Debug, Clone)]
pub struct SparseGrad {
    dense: Embedding,
    touched: Vec<usize>,
    mark: Vec<bool>,
}

impl SparseGrad {
    pub fn new(n: usize, d: usize) -> Self {
        Self { dense: Embedding::zeros(n, d), touched: Vec::new(), mark: vec![false; n] }
    }

    fn add(&mut self, row: usize, coef: f64, v: &[f64]) {
        if !self.mark[row] {
            self.mark[row] = true;
            self.touched.push(row);
        }
        for (g, x) in self.dense.row_mut(row).iter_mut().zip(v) {
            *g += coef * x;
        }
    }

    /// `target += alpha * self`, then reset.
    fn apply_and_clear(&mut self, target: &mut Embedding, alpha: f64) {
        self.touched.sort_unstable();
        for &r in &self.touched {
            let g = self.dense.row_mut(r);
            for (t, x) in target.row_mut(r).iter_mut().zip(g.iter_mut()) {
                *t += alpha * *x;
                *x = 0.0;
            }
            self.mark[r] = false;
        }
        self.touched.clear();
    }

    pub fn to_dense(&self) -> Embedding {
        self.dense.clone()
    }
}

/// Accumulate the batch gradient into `gx` (centers) and `gy` (contexts);
/// returns the batch loss at the current parameters.
pub fn sgns_batch_grad(
    centers: &Embedding,
    contexts: &Embedding,
    batch: &SgnsBatch,
    gx: &mut SparseGrad,
    gy: &mut SparseGrad,
) -> f64 {
    let mut loss = 0.0;
    for (&(c, o), negs) in batch.pairs.iter().zip(&batch.negatives) {
        let xc = centers.row(c);
        let yo = contexts.row(o);
        let s = dot(xc, yo);
        loss += neg_log_sigmoid(s);
        let g = sigmoid(s) - 1.0;
        gx.add(c, g, yo);
        gy.add(o, g, xc);
        for &n in negs {
            let yn = contexts.row(n);
            let s = dot(xc, yn);
            loss += neg_log_sigmoid(-s);
            let g = sigmoid(s);
            gx.add(c, g, yn);
            gy.add(n, g, xc);
        }
    }
    loss
}

/// One mini-batch SGD step on both matrices. Negatives are drawn from the
/// corpus with `rng`. Returns the batch loss before the update.
#[allow(clippy::too_many_arguments)]
pub fn sgns_step<R: Rng>(
    centers: &mut Embedding,
    contexts: &mut Embedding,
    corpus: &SgnsCorpus,
    indices: &[usize],
    k_neg: usize,
    lr: f64,
    rng: &mut R,
    scratch: &mut (SparseGrad, SparseGrad),
) -> f64 {
    let batch = SgnsBatch::draw(corpus, indices, k_neg, rng);
    let loss = sgns_batch_grad(centers, contexts, &batch, &mut scratch.0, &mut scratch.1);
    scratch.0.apply_and_clear(centers, -lr);
    scratch.1.apply_and_clear(contexts, -lr);
    loss
}

/// Skip-gram state owned by one training loop: the corpus and the context
/// matrix (the center matrix is the embedding itself).
#[derive(Debug, Clone)]
pub struct SgnsModel {
    pub corpus: SgnsCorpus,
    pub contexts: Embedding,
    pub k_neg: usize,
    pub batch_size: usize,
    scratch: (SparseGrad, SparseGrad),
}

impl SgnsModel {
    pub fn new(corpus: SgnsCorpus, n: usize, d: usize, k_neg: usize, batch_size: usize) -> Self {
        Self {
            corpus,
            contexts: Embedding::zeros(n, d),
            k_neg,
            batch_size: batch_size.max(1),
            scratch: (SparseGrad::new(n, d), SparseGrad::new(n, d)),
        }
    }

    /// One pass over the shuffled corpus. Returns the summed pair loss.
    pub fn epoch<R: Rng>(&mut self, centers: &mut Embedding, lr: f64, rng: &mut R) -> f64 {
        let mut order: Vec<usize> = (0..self.corpus.pairs.len()).collect();
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(self.batch_size) {
            total += sgns_step(
                centers,
                &mut self.contexts,
                &self.corpus,
                chunk,
                self.k_neg,
                lr,
                rng,
                &mut self.scratch,
            );
        }
        total
    }
}
