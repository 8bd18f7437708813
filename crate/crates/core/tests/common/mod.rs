#![allow(dead_code)]

use curvreg::graph::Graph;
use curvreg::seed;
use curvreg::Embedding;
use rand::Rng;

/// Connected random graph: a random spanning tree plus extra edges with
/// probability `p`.
pub fn random_connected(n: usize, p: f64, seed_value: u64) -> Graph {
    let mut rng = seed::rng(seed_value);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

pub fn random_embedding(n: usize, d: usize, seed_value: u64) -> Embedding {
    let mut rng = seed::rng(seed_value);
    let data = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Embedding::from_vec(n, d, data).unwrap()
}

/// Central finite-difference gradient of `f` at `x`.
pub fn numeric_gradient(x: &Embedding, h: f64, mut f: impl FnMut(&Embedding) -> f64) -> Embedding {
    let mut g = Embedding::zeros(x.n(), x.dim());
    let mut probe = x.clone();
    for i in 0..x.as_slice().len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + h;
        let up = f(&probe);
        probe.as_mut_slice()[i] = orig - h;
        let down = f(&probe);
        probe.as_mut_slice()[i] = orig;
        g.as_mut_slice()[i] = (up - down) / (2.0 * h);
    }
    g
}

/// `‖a - b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
