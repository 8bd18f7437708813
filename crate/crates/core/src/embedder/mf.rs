use rand::Rng;

use crate::embedding::Embedding;
use crate::graph::Graph;
use crate::seed;

/// Squared-error adjacency factorization over every edge (target 1) and the
/// given non-edges (target 0):
/// `Σ (A_ij - ⟨x_i, x_j⟩)²`.
pub fn mf_loss_grad(emb: &Embedding, graph: &Graph, negatives: &[(usize, usize)]) -> (f64, Embedding) {
    let mut grad = Embedding::zeros(emb.n(), emb.dim());
    let terms = graph.edges().iter().map(|&e| (e, 1.0)).chain(negatives.iter().map(|&e| (e, 0.0)));
    let mut loss = 0.0;
    for ((i, j), target) in terms {
        let xi = emb.row(i);
        let xj = emb.row(j);
        let dot: f64 = xi.iter().zip(xj).map(|(a, b)| a * b).sum();
        let r = target - dot;
        loss += r * r;
        let coef = -2.0 * r;
        // copy before borrowing grad rows mutably; i != j always
        for k in 0..emb.dim() {
            grad.row_mut(i)[k] += coef * xj[k];
            grad.row_mut(j)[k] += coef * xi[k];
        }
    }
    (loss, grad)
}

/// Draw `per_edge` uniformly random non-adjacent pairs per edge. Returns no
/// negatives for a complete graph.
pub fn sample_non_edges(graph: &Graph, per_edge: usize, seed: u64) -> Vec<(usize, usize)> {
    let n = graph.n();
    let non_edges = n * n.saturating_sub(1) / 2 - graph.num_edges();
    if non_edges == 0 || per_edge == 0 {
        return Vec::new();
    }
    let want = graph.num_edges() * per_edge;
    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(want);
    while out.len() < want {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && !graph.has_edge(a, b) {
            out.push((a.min(b), a.max(b)));
        }
    }
    out
}

/// Matrix-factorization objective with its negative pairs fixed at
/// construction, so full-batch descent sees one deterministic function.
#[derive(Debug, Clone)]
pub struct MfObjective {
    pub negatives: Vec<(usize, usize)>,
}

impl MfObjective {
    pub fn new(graph: &Graph, per_edge: usize, seed: u64) -> Self {
        Self { negatives: sample_non_edges(graph, per_edge, seed) }
    }

    pub fn loss_grad(&self, emb: &Embedding, graph: &Graph) -> (f64, Embedding) {
        mf_loss_grad(emb, graph, &self.negatives)
    }
}
