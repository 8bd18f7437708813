//! Undirected, unweighted graphs with contiguous node ids, plus the path
//! generators (shortest paths, random walks) everything downstream consumes.

mod path;
mod walk;

pub use path::{
    all_pairs, make_acyclic, pair_paths, sample_node_set, shortest_path, BfsTree, PathKind,
    PathSet, PathSource, PolygonalPath,
};
pub use walk::{random_walks, transition_weights, WalkConfig, WalkStrategy};

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::{Error, Result};

/// An undirected simple graph. Node ids are `0..n`; every node keeps the
/// token it had in the input so results can be written back in its terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Graph {
    /// Build a graph on `n` nodes labelled `"0".."n-1"`. Self-loops are
    /// dropped, duplicates and reversed duplicates collapse to one edge.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::from_labeled(labels, edges)
    }

    fn from_labeled(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = labels.len();
        let mut adjacency = vec![Vec::new(); n];
        for (a, b) in edges {
            for id in [a, b] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            if a == b {
                continue;
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        let edges = adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect();
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Ok(Self { adjacency, edges, labels, index })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor list of `node`.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n() && self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Original token of an internal id.
    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Internal id of an original token.
    pub fn id_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub(crate) fn check_node(&self, id: usize) -> Result<()> {
        if id < self.n() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { id, n: self.n() })
        }
    }

    /// Same nodes and labels, different edge set.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_labeled(self.labels.clone(), edges)
    }

    /// Subgraph induced on `nodes`; new ids follow the order of `nodes`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Self {
        let mut remap = vec![usize::MAX; self.n()];
        for (new, &old) in nodes.iter().enumerate() {
            remap[old] = new;
        }
        let labels = nodes.iter().map(|&v| self.labels[v].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|&&(a, b)| remap[a] != usize::MAX && remap[b] != usize::MAX)
            .map(|&(a, b)| (remap[a], remap[b]));
        Self::from_labeled(labels, edges).expect("remapped ids are in range")
    }

    /// Connected components, each sorted ascending, in order of their
    /// smallest internal id.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n()];
        let mut components = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.n() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut component = Vec::new();
            while let Some(v) = queue.pop_front() {
                component.push(v);
                for &w in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            component.sort_unstable();
            components.push(component);
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.n() > 0 && self.connected_components().len() == 1
    }

    /// 64-bit content hash of the node tokens and edge set.
    pub fn content_hash(&self) -> u64 {
        let mut bytes = Vec::new();
        for l in &self.labels {
            bytes.extend_from_slice(l.as_bytes());
            bytes.push(0);
        }
        for &(a, b) in &self.edges {
            bytes.extend_from_slice(&(a as u64).to_le_bytes());
            bytes.extend_from_slice(&(b as u64).to_le_bytes());
        }
        crate::seed::content_hash(&bytes)
    }
}

/// Order node tokens numerically when both parse as integers, lexically
/// otherwise.
pub fn compare_tokens(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

fn is_skippable(line: &str) -> bool {
    line.is_empty() || line.starts_with('#')
}

/// Parse an edge list: one edge per line, two whitespace-separated tokens,
/// `#` comment lines ignored. Ids are assigned in order of first appearance.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut intern = |token: &str| -> usize {
        if let Some(&id) = index.get(token) {
            return id;
        }
        let id = labels.len();
        labels.push(token.to_owned());
        index.insert(token.to_owned(), id);
        id
    };
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if is_skippable(line) {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected two node tokens, found {}", tokens.len()),
            });
        }
        let a = intern(tokens[0]);
        let b = intern(tokens[1]);
        edges.push((a, b));
    }
    let graph = Graph::from_labeled(labels, edges)?;
    if graph.num_edges() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(graph)
}

/// Induced subgraph on the largest connected component. Size ties go to the
/// component holding the smallest original token.
pub fn largest_connected_component(graph: &Graph) -> Graph {
    let components = graph.connected_components();
    let min_token = |c: &Vec<usize>| {
        c.iter()
            .map(|&v| graph.label(v))
            .min_by(|a, b| compare_tokens(a, b))
            .unwrap_or("")
            .to_owned()
    };
    let best = components.iter().fold(None::<&Vec<usize>>, |best, c| match best {
        None => Some(c),
        Some(b) => match c.len().cmp(&b.len()) {
            Ordering::Greater => Some(c),
            Ordering::Equal if compare_tokens(&min_token(c), &min_token(b)).is_lt() => Some(c),
            _ => Some(b),
        },
    });
    match best {
        Some(c) if c.len() < graph.n() => graph.induced_subgraph(c),
        _ => graph.clone(),
    }
}

/// Class labels for (a subset of) the nodes of a graph, densified to `0..C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    labels: BTreeMap<usize, usize>,
    class_names: Vec<String>,
}

impl LabelMap {
    /// Build from `(node id, class id)` pairs; class names are the ids.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let labels: BTreeMap<usize, usize> = pairs.into_iter().collect();
        let classes = labels.values().max().map_or(0, |m| m + 1);
        Self { labels, class_names: (0..classes).map(|c| c.to_string()).collect() }
    }

    pub fn get(&self, node: usize) -> Option<usize> {
        self.labels.get(&node).copied()
    }

    /// Labelled nodes in ascending id order.
    pub fn nodes(&self) -> Vec<usize> {
        self.labels.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.labels.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_name(&self, class: usize) -> &str {
        &self.class_names[class]
    }

    /// Carry labels from `from` over to `to` (e.g. its largest component),
    /// matching nodes by original token. Nodes missing from `to` are dropped;
    /// class ids are kept.
    pub fn remap(&self, from: &Graph, to: &Graph) -> Self {
        let labels = self
            .labels
            .iter()
            .filter_map(|(&v, &c)| to.id_of(from.label(v)).map(|w| (w, c)))
            .collect();
        Self { labels, class_names: self.class_names.clone() }
    }
}

/// Parse `node_token label_token` lines against `graph`. Class tokens are
/// densified in sorted token order.
pub fn load_labels(text: &str, graph: &Graph) -> Result<LabelMap> {
    let mut raw: Vec<(usize, String)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if is_skippable(line) {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected `node label`, found {} tokens", tokens.len()),
            });
        }
        let node = graph.id_of(tokens[0]).ok_or_else(|| Error::UnknownNode(tokens[0].to_owned()))?;
        raw.push((node, tokens[1].to_owned()));
    }
    if raw.is_empty() {
        return Err(Error::EmptyLabels);
    }
    let mut class_names: Vec<String> = raw.iter().map(|(_, c)| c.clone()).collect();
    class_names.sort_by(|a, b| compare_tokens(a, b));
    class_names.dedup();
    let class_of: HashMap<&str, usize> =
        class_names.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let labels = raw.iter().map(|(v, c)| (*v, class_of[c.as_str()])).collect();
    Ok(LabelMap { labels, class_names })
}
