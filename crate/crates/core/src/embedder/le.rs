use serde::Serialize;

use crate::embedding::Embedding;
use crate::graph::Graph;

/// Individual terms of the Laplacian-penalty objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeTerms {
    /// `Σ_{(i,j)∈E} ‖x_i - x_j‖²`
    pub smoothness: f64,
    /// `β ‖mean_i x_i‖²`
    pub centering: f64,
    /// `γ ‖(1/n) XᵀX - I‖²_F`
    pub moment: f64,
}

impl LeTerms {
    pub fn total(&self) -> f64 {
        self.smoothness + self.centering + self.moment
    }
}

/// Laplacian smoothness with a centering penalty and a whitening penalty
/// pulling the second-moment matrix towards the identity. The diagonal of the
/// whitening term rules out the all-equal minimizer; the off-diagonal part
/// keeps dimensions from collapsing onto the same eigenvector.
pub fn le_loss_grad(emb: &Embedding, graph: &Graph, beta: f64, gamma: f64) -> (LeTerms, Embedding) {
    let n = emb.n();
    let d = emb.dim();
    let nf = n as f64;
    let mut grad = Embedding::zeros(n, d);
    let mut smoothness = 0.0;
    for &(i, j) in graph.edges() {
        for k in 0..d {
            let diff = emb.row(i)[k] - emb.row(j)[k];
            smoothness += diff * diff;
            grad.row_mut(i)[k] += 2.0 * diff;
            grad.row_mut(j)[k] -= 2.0 * diff;
        }
    }
    let mut mean = vec![0.0; d];
    let mut cov = vec![0.0; d * d];
    for row in emb.rows() {
        for k in 0..d {
            mean[k] += row[k];
            for l in k..d {
                cov[k * d + l] += row[k] * row[l];
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    for k in 0..d {
        cov[k * d + k] -= nf;
        for l in k..d {
            cov[k * d + l] /= nf;
            cov[l * d + k] = cov[k * d + l];
        }
    }
    let centering = beta * mean.iter().map(|m| m * m).sum::<f64>();
    let moment = gamma * cov.iter().map(|c| c * c).sum::<f64>();
    for i in 0..n {
        let x = emb.row(i).to_vec();
        let g = grad.row_mut(i);
        for k in 0..d {
            let dev: f64 = (0..d).map(|l| cov[k * d + l] * x[l]).sum();
            g[k] += 2.0 * beta * mean[k] / nf + 4.0 * gamma * dev / nf;
        }
    }
    (LeTerms { smoothness, centering, moment }, grad)
}
