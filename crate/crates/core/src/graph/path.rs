use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Shortest,
    Walk,
}

/// An acyclic node sequence of at least two nodes, realizing a polygonal
/// curve once the nodes are embedded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolygonalPath {
    nodes: Vec<usize>,
    kind: PathKind,
}

impl PolygonalPath {
    pub fn new(nodes: Vec<usize>, kind: PathKind) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidPath(format!("{} node(s), need at least 2", nodes.len())));
        }
        let mut seen = HashSet::with_capacity(nodes.len());
        if let Some(v) = nodes.iter().find(|v| !seen.insert(**v)) {
            return Err(Error::InvalidPath(format!("node {v} repeats")));
        }
        Ok(Self { nodes, kind })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn source(&self) -> usize {
        self.nodes[0]
    }

    pub fn target(&self) -> usize {
        self.nodes[self.nodes.len() - 1]
    }

    /// Check ids against `graph` and that consecutive nodes are adjacent.
    pub fn validate(&self, graph: &Graph) -> Result<()> {
        for &v in &self.nodes {
            graph.check_node(v)?;
        }
        for w in self.nodes.windows(2) {
            if !graph.has_edge(w[0], w[1]) {
                return Err(Error::InvalidPath(format!("{} and {} are not adjacent", w[0], w[1])));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathSource {
    AllPairs,
    SampledPairs { nodes: Vec<usize> },
    RandomWalk { walks_per_node: usize, walk_length: usize },
}

/// A collection of paths with their provenance. `skipped` counts candidate
/// paths that were not realized (unreachable pairs, walks too short).
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<PolygonalPath>,
    pub source: PathSource,
    pub skipped: usize,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PolygonalPath> {
        self.paths.iter()
    }

    /// Number of interior vertices over all paths.
    pub fn interior_count(&self) -> usize {
        self.paths.iter().map(|p| p.len().saturating_sub(2)).sum()
    }

    pub fn validate(&self, graph: &Graph) -> Result<()> {
        self.paths.iter().try_for_each(|p| p.validate(graph))
    }

    /// 64-bit content hash of the node sequences.
    pub fn content_hash(&self) -> u64 {
        let mut bytes = Vec::new();
        for p in &self.paths {
            bytes.extend_from_slice(&(p.len() as u64).to_le_bytes());
            for &v in p.nodes() {
                bytes.extend_from_slice(&(v as u64).to_le_bytes());
            }
        }
        seed::content_hash(&bytes)
    }
}

/// Breadth-first search tree. Neighbors are expanded in ascending id order
/// and a node's parent is whichever node discovered it first, which fixes
/// one shortest path per pair.
#[derive(Debug, Clone)]
pub struct BfsTree {
    source: usize,
    parent: Vec<usize>,
    dist: Vec<usize>,
}

impl BfsTree {
    pub fn new(graph: &Graph, source: usize) -> Self {
        Self::build(graph, source, None)
    }

    fn build(graph: &Graph, source: usize, stop_at: Option<usize>) -> Self {
        let n = graph.n();
        let mut parent = vec![usize::MAX; n];
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        parent[source] = source;
        queue.push_back(source);
        'outer: while let Some(v) = queue.pop_front() {
            for &w in graph.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    parent[w] = v;
                    if Some(w) == stop_at {
                        break 'outer;
                    }
                    queue.push_back(w);
                }
            }
        }
        Self { source, parent, dist }
    }

    pub fn source(&self) -> usize {
        self.source
    }

    /// BFS parent of `node`; `None` for the source and unreachable nodes.
    pub fn parent(&self, node: usize) -> Option<usize> {
        (node != self.source && self.dist[node] != usize::MAX).then_some(self.parent[node])
    }

    /// Hop distance, `None` when unreachable.
    pub fn distance(&self, target: usize) -> Option<usize> {
        (self.dist[target] != usize::MAX).then_some(self.dist[target])
    }

    /// Node sequence from the source to `target`, `None` when unreachable.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        self.distance(target)?;
        let mut nodes = Vec::with_capacity(self.dist[target] + 1);
        let mut v = target;
        nodes.push(v);
        while v != self.source {
            v = self.parent[v];
            nodes.push(v);
        }
        nodes.reverse();
        Some(nodes)
    }
}

/// One BFS shortest path from `src` to `dst`; `Ok(None)` when `dst` is
/// unreachable.
pub fn shortest_path(graph: &Graph, src: usize, dst: usize) -> Result<Option<PolygonalPath>> {
    graph.check_node(src)?;
    graph.check_node(dst)?;
    if src == dst {
        return Err(Error::InvalidArgument(format!("shortest path endpoints coincide ({src})")));
    }
    let tree = BfsTree::build(graph, src, Some(dst));
    Ok(tree.path_to(dst).map(|nodes| PolygonalPath { nodes, kind: PathKind::Shortest }))
}

/// All unordered pairs `(i, j)`, `i < j`, over `nodes` in the given order.
pub fn all_pairs(nodes: &[usize]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(nodes.len() * nodes.len().saturating_sub(1) / 2);
    for (k, &i) in nodes.iter().enumerate() {
        for &j in &nodes[k + 1..] {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Shortest paths for each pair, in input order. One BFS is run per distinct
/// source; unreachable pairs are skipped and counted.
pub fn pair_paths(graph: &Graph, pairs: &[(usize, usize)], source: PathSource) -> Result<PathSet> {
    let mut seen = HashSet::with_capacity(pairs.len());
    let mut by_source: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, &(a, b)) in pairs.iter().enumerate() {
        graph.check_node(a)?;
        graph.check_node(b)?;
        if a == b {
            return Err(Error::InvalidArgument(format!("pair endpoints coincide ({a})")));
        }
        if !seen.insert((a, b)) {
            return Err(Error::InvalidArgument(format!("duplicate pair ({a}, {b})")));
        }
        by_source.entry(a).or_default().push(k);
    }
    let mut slots: Vec<Option<Vec<usize>>> = vec![None; pairs.len()];
    for (src, ks) in by_source {
        let tree = BfsTree::new(graph, src);
        for k in ks {
            slots[k] = tree.path_to(pairs[k].1);
        }
    }
    let skipped = slots.iter().filter(|s| s.is_none()).count();
    let paths = slots
        .into_iter()
        .flatten()
        .map(|nodes| PolygonalPath { nodes, kind: PathKind::Shortest })
        .collect();
    Ok(PathSet { paths, source, skipped })
}

/// Uniform sample of `size` distinct nodes, returned sorted.
pub fn sample_node_set(graph: &Graph, size: usize, seed: u64) -> Result<Vec<usize>> {
    let n = graph.n();
    if size < 2 || size > n {
        return Err(Error::InvalidArgument(format!("sample size {size} outside [2, {n}]")));
    }
    let mut rng = seed::rng(seed);
    let mut nodes = index::sample(&mut rng, n, size).into_vec();
    nodes.sort_unstable();
    Ok(nodes)
}

/// Truncate `walk` immediately before its first repeated node. Returns `None`
/// when fewer than two nodes survive.
pub fn make_acyclic(walk: &[usize], kind: PathKind) -> Option<PolygonalPath> {
    let mut seen = HashSet::with_capacity(walk.len());
    let end = walk.iter().position(|v| !seen.insert(*v)).unwrap_or(walk.len());
    (end >= 2).then(|| PolygonalPath { nodes: walk[..end].to_vec(), kind })
}
