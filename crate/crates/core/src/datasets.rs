//! Small built-in and synthetic graphs for tests, demos and case studies.

use rand::Rng;

use crate::graph::{Graph, LabelMap};
use crate::seed;

const KARATE_EDGES: [(usize, usize); 78] = [
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10), (0, 11), (0, 12),
    (0, 13), (0, 17), (0, 19), (0, 21), (0, 31), (1, 2), (1, 3), (1, 7), (1, 13), (1, 17), (1, 19),
    (1, 21), (1, 30), (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27), (2, 28), (2, 32), (3, 7),
    (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16), (6, 16), (8, 30), (8, 32), (8, 33),
    (9, 33), (13, 33), (14, 32), (14, 33), (15, 32), (15, 33), (18, 32), (18, 33), (19, 33),
    (20, 32), (20, 33), (22, 32), (22, 33), (23, 25), (23, 27), (23, 29), (23, 32), (23, 33),
    (24, 25), (24, 27), (24, 31), (25, 31), (26, 29), (26, 33), (27, 33), (28, 31), (28, 33),
    (29, 32), (29, 33), (30, 32), (30, 33), (31, 32), (31, 33), (32, 33),
];

const KARATE_FACTIONS: [usize; 34] = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1,
    1, 1,
];

/// Zachary's karate club (34 nodes, 78 edges).
pub fn karate_club() -> Graph {
    Graph::from_edges(34, KARATE_EDGES).expect("static edge list is valid")
}

/// The two factions the karate club split into.
pub fn karate_factions() -> LabelMap {
    LabelMap::from_pairs(KARATE_FACTIONS.iter().copied().enumerate())
}

pub fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("valid")
}

pub fn cycle(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid")
}

/// Two `k`-cliques joined by a single bridge edge `(k-1, k)`.
pub fn barbell(k: usize) -> Graph {
    let mut edges = Vec::new();
    for offset in [0, k] {
        for i in 0..k {
            for j in i + 1..k {
                edges.push((offset + i, offset + j));
            }
        }
    }
    edges.push((k - 1, k));
    Graph::from_edges(2 * k, edges).expect("valid")
}

/// Planted two-block graph: nodes `0..n/2` and `n/2..n` form the blocks;
/// each pair is linked with probability `p_in` inside a block and `p_out`
/// across. A spanning path is added so the graph is connected. Labels give
/// block membership.
pub fn two_block(n: usize, p_in: f64, p_out: f64, seed: u64) -> (Graph, LabelMap) {
    planted_partition(n, 2, p_in, p_out, seed)
}

/// Planted partition with `blocks` equal-size contiguous blocks.
pub fn planted_partition(n: usize, blocks: usize, p_in: f64, p_out: f64, seed: u64) -> (Graph, LabelMap) {
    let mut rng = seed::rng(seed);
    let block_of = |v: usize| v * blocks / n;
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    for i in 0..n {
        for j in i + 1..n {
            let p = if block_of(i) == block_of(j) { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let g = Graph::from_edges(n, edges).expect("valid");
    (g, LabelMap::from_pairs((0..n).map(|v| (v, block_of(v)))))
}
