use rand::Rng;
use serde::{Deserialize, Serialize};

use super::path::{make_acyclic, PathKind, PathSet, PathSource};
use super::Graph;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WalkStrategy {
    Uniform,
    /// Second-order node2vec walk with return parameter `p` and in-out
    /// parameter `q`.
    Biased { p: f64, q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    /// Number of nodes in a walk before truncation.
    pub walk_length: usize,
    pub strategy: WalkStrategy,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self { walks_per_node: 10, walk_length: 40, strategy: WalkStrategy::Uniform }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length < 2 {
            return Err(Error::InvalidArgument("walk length must be at least 2".into()));
        }
        if let WalkStrategy::Biased { p, q } = self.strategy {
            if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
                return Err(Error::InvalidArgument(format!("p and q must be positive (p={p}, q={q})")));
            }
        }
        Ok(())
    }
}

/// Unnormalized transition weights over `graph.neighbors(current)`.
///
/// Without a previous node (first step) or under the uniform strategy every
/// neighbor weighs 1. Otherwise a neighbor weighs `1/p` if it is the previous
/// node, 1 if it is adjacent to the previous node and `1/q` if it is two hops
/// away from it.
pub fn transition_weights(
    graph: &Graph,
    previous: Option<usize>,
    current: usize,
    strategy: WalkStrategy,
) -> Vec<f64> {
    let nbrs = graph.neighbors(current);
    match (strategy, previous) {
        (WalkStrategy::Biased { p, q }, Some(prev)) => nbrs
            .iter()
            .map(|&x| {
                if x == prev {
                    1.0 / p
                } else if graph.has_edge(prev, x) {
                    1.0
                } else {
                    1.0 / q
                }
            })
            .collect(),
        _ => vec![1.0; nbrs.len()],
    }
}

fn pick_weighted<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return k;
        }
        u -= w;
    }
    weights.len() - 1
}

fn walk_from<R: Rng>(graph: &Graph, start: usize, cfg: &WalkConfig, rng: &mut R) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    while walk.len() < cfg.walk_length {
        let cur = walk[walk.len() - 1];
        let nbrs = graph.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        let next = match cfg.strategy {
            WalkStrategy::Uniform => nbrs[rng.gen_range(0..nbrs.len())],
            WalkStrategy::Biased { .. } => {
                let prev = (walk.len() >= 2).then(|| walk[walk.len() - 2]);
                let weights = transition_weights(graph, prev, cur, cfg.strategy);
                nbrs[pick_weighted(&weights, rng)]
            }
        };
        walk.push(next);
    }
    walk
}

/// `walks_per_node` walks from every node, each truncated at its first
/// revisit. Walks left with fewer than two nodes (isolated start nodes) are
/// dropped and counted in `skipped`.
///
/// Each start node draws from its own stream derived from `seed`, so the
/// output does not depend on the order nodes are processed in.
pub fn random_walks(graph: &Graph, cfg: &WalkConfig, seed: u64) -> Result<PathSet> {
    cfg.validate()?;
    let mut paths = Vec::with_capacity(graph.n() * cfg.walks_per_node);
    let mut skipped = 0;
    for start in 0..graph.n() {
        let mut rng = seed::rng(seed::derive_index(seed, start as u64));
        for _ in 0..cfg.walks_per_node {
            let walk = walk_from(graph, start, cfg, &mut rng);
            match make_acyclic(&walk, PathKind::Walk) {
                Some(p) => paths.push(p),
                None => skipped += 1,
            }
        }
    }
    Ok(PathSet {
        paths,
        source: PathSource::RandomWalk {
            walks_per_node: cfg.walks_per_node,
            walk_length: cfg.walk_length,
        },
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(walks: usize, len: usize, strategy: WalkStrategy) -> WalkConfig {
        WalkConfig { walks_per_node: walks, walk_length: len, strategy }
    }

    #[test]
    fn first_step_on_path3_is_fair() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let c = cfg(1, 2, WalkStrategy::Uniform);
        let trials = 4000;
        let mut to_zero = 0;
        for s in 0..trials {
            let mut rng = seed::rng(s);
            let w = walk_from(&g, 1, &c, &mut rng);
            assert_eq!(w.len(), 2);
            if w[1] == 0 {
                to_zero += 1;
            }
        }
        let sigma = (trials as f64 * 0.25).sqrt();
        assert!((to_zero as f64 - trials as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn unit_bias_matches_uniform_weights() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]).unwrap();
        for cur in 0..5 {
            for &prev in g.neighbors(cur) {
                let w = transition_weights(&g, Some(prev), cur, WalkStrategy::Biased { p: 1.0, q: 1.0 });
                assert!(w.iter().all(|&x| x == 1.0));
            }
        }
    }

    #[test]
    fn biased_weights_follow_distance_classes() {
        // 0-1, 1-2, 0-2 triangle, plus 1-3 leaf
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2), (1, 3)]).unwrap();
        let w = transition_weights(&g, Some(0), 1, WalkStrategy::Biased { p: 2.0, q: 4.0 });
        // neighbors of 1: [0, 2, 3]
        assert_eq!(w, vec![0.5, 1.0, 0.25]);
    }

    #[test]
    fn biased_empirical_distribution() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2), (1, 3)]).unwrap();
        let strategy = WalkStrategy::Biased { p: 2.0, q: 4.0 };
        let weights = [0.5, 1.0, 0.25];
        let total: f64 = weights.iter().sum();
        let trials = 20_000;
        let mut counts = [0usize; 3];
        let mut rng = seed::rng(5);
        for _ in 0..trials {
            let w = transition_weights(&g, Some(0), 1, strategy);
            counts[pick_weighted(&w, &mut rng)] += 1;
        }
        for k in 0..3 {
            let p = weights[k] / total;
            let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[k] as f64 - trials as f64 * p).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn walks_are_acyclic_adjacent_and_reproducible() {
        let g = Graph::from_edges(
            8,
            [(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (4, 5), (5, 6), (6, 7), (7, 4)],
        )
        .unwrap();
        for strategy in [WalkStrategy::Uniform, WalkStrategy::Biased { p: 0.5, q: 2.0 }] {
            let c = cfg(5, 12, strategy);
            let a = random_walks(&g, &c, 42).unwrap();
            assert_eq!(a, random_walks(&g, &c, 42).unwrap());
            assert!(a.validate(&g).is_ok());
            assert_eq!(a.len() + a.skipped, 8 * 5);
            assert!(a.iter().all(|p| p.kind() == PathKind::Walk));
        }
    }

    #[test]
    fn isolated_start_is_dropped() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let set = random_walks(&g, &cfg(2, 5, WalkStrategy::Uniform), 1).unwrap();
        assert_eq!(set.skipped, 2);
        assert!(set.iter().all(|p| p.source() != 2));
    }

    #[test]
    fn rejects_bad_config() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        assert!(random_walks(&g, &cfg(1, 1, WalkStrategy::Uniform), 0).is_err());
        assert!(random_walks(&g, &cfg(1, 3, WalkStrategy::Biased { p: 0.0, q: 1.0 }), 0).is_err());
    }
}
