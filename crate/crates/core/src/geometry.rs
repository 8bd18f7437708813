//! Metric and curvature computations over an embedding: Euclidean and
//! geodesic distances, turning-angle cosines along polygonal paths, the
//! per-node curvature field, distortion, and the flatness condition check.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::Serialize;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::{BfsTree, Graph, PathSet, PolygonalPath};
use crate::seed;

/// Segments at or below this length are treated as degenerate.
pub const SEGMENT_EPS: f64 = 1e-12;

/// Largest graph for which all ordered pairs are used by default.
pub const FULL_PAIRS_LIMIT: usize = 3000;

/// Pairs drawn per node when the graph is too large for all pairs.
pub const PAIRS_PER_NODE: usize = 100;

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { left: a.len(), right: b.len() });
    }
    Ok(dist(a, b))
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Sum of segment lengths along the embedded path.
pub fn geodesic_distance(emb: &Embedding, path: &PolygonalPath) -> f64 {
    path.nodes().windows(2).map(|w| dist(emb.row(w[0]), emb.row(w[1]))).sum()
}

/// Cosine of the turning angle at `b` for the polyline `a → b → c`, or
/// `None` when either segment is degenerate. 1 means straight, -1 means the
/// curve doubles back.
pub(crate) fn turning_cosine_at(a: &[f64], b: &[f64], c: &[f64]) -> Option<f64> {
    let mut uu = 0.0;
    let mut vv = 0.0;
    let mut uv = 0.0;
    for k in 0..a.len() {
        let u = b[k] - a[k];
        let v = c[k] - b[k];
        uu += u * u;
        vv += v * v;
        uv += u * v;
    }
    let (nu, nv) = (uu.sqrt(), vv.sqrt());
    if nu <= SEGMENT_EPS || nv <= SEGMENT_EPS {
        return None;
    }
    Some((uv / (nu * nv)).clamp(-1.0, 1.0))
}

/// Turning cosine at interior position `q` of `path` (`1 <= q <= len-2`).
/// `Ok(None)` signals a degenerate segment.
pub fn turning_cosine(emb: &Embedding, path: &PolygonalPath, q: usize) -> Result<Option<f64>> {
    if q == 0 || q + 1 >= path.len() {
        return Err(Error::InvalidArgument(format!(
            "position {q} is not interior to a path of {} nodes",
            path.len()
        )));
    }
    let v = path.nodes();
    Ok(turning_cosine_at(emb.row(v[q - 1]), emb.row(v[q]), emb.row(v[q + 1])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    /// Index of the path within its path set.
    pub path: usize,
    /// Interior position within the path.
    pub position: usize,
    /// Node id at that position.
    pub node: usize,
    pub cosine: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Curvature samples for every interior vertex of every path, grouped by node.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub samples: Vec<CurvatureSample>,
    /// Node id to indices into `samples`.
    pub by_node: BTreeMap<usize, Vec<usize>>,
    pub degenerate: usize,
}

impl CurvatureField {
    pub fn stats(&self) -> Option<CurvatureStats> {
        if self.samples.is_empty() {
            return None;
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for s in &self.samples {
            min = min.min(s.cosine);
            max = max.max(s.cosine);
            sum += s.cosine;
        }
        Some(CurvatureStats { mean: sum / self.samples.len() as f64, min, max })
    }

    /// The curvature vector at `node`: cosines of every sample centred there.
    pub fn at_node(&self, node: usize) -> Vec<f64> {
        self.by_node
            .get(&node)
            .map(|ix| ix.iter().map(|&i| self.samples[i].cosine).collect())
            .unwrap_or_default()
    }
}

pub fn curvature_field(emb: &Embedding, paths: &PathSet) -> Result<CurvatureField> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("curvature field needs at least one path".into()));
    }
    let mut samples = Vec::with_capacity(paths.interior_count());
    let mut by_node: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut degenerate = 0;
    for (pi, path) in paths.iter().enumerate() {
        let v = path.nodes();
        for q in 1..v.len().saturating_sub(1) {
            match turning_cosine_at(emb.row(v[q - 1]), emb.row(v[q]), emb.row(v[q + 1])) {
                Some(cosine) => {
                    by_node.entry(v[q]).or_default().push(samples.len());
                    samples.push(CurvatureSample { path: pi, position: q, node: v[q], cosine });
                }
                None => degenerate += 1,
            }
        }
    }
    Ok(CurvatureField { samples, by_node, degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    All,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport {
    pub rho: f64,
    pub mode: PairMode,
    /// Ordered pairs that contributed to the mean.
    pub pairs_used: usize,
    pub skipped_unreachable: usize,
    pub skipped_coincident: usize,
}

/// Mean ratio of geodesic to Euclidean distance over ordered node pairs.
///
/// The geodesic follows the BFS shortest path from the first to the second
/// node of each pair. With `pairs == None` every ordered pair of distinct
/// nodes is used, which is only allowed up to [`FULL_PAIRS_LIMIT`] nodes.
/// Unreachable pairs and pairs whose endpoints coincide in the embedding are
/// skipped and counted.
pub fn distortion(
    emb: &Embedding,
    graph: &Graph,
    pairs: Option<&[(usize, usize)]>,
) -> Result<DistortionReport> {
    if emb.n() != graph.n() {
        return Err(Error::DimensionMismatch { left: emb.n(), right: graph.n() });
    }
    let n = graph.n();
    let (targets, mode): (BTreeMap<usize, Vec<usize>>, _) = match pairs {
        Some(pairs) => {
            let mut by_src: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &(a, b) in pairs {
                graph.check_node(a)?;
                graph.check_node(b)?;
                if a == b {
                    return Err(Error::InvalidArgument(format!("pair endpoints coincide ({a})")));
                }
                by_src.entry(a).or_default().push(b);
            }
            (by_src, PairMode::Explicit)
        }
        None => {
            if n > FULL_PAIRS_LIMIT {
                return Err(Error::TooManyPairs { n, limit: FULL_PAIRS_LIMIT, pairs: n * (n - 1) });
            }
            let all = (0..n).map(|a| (a, (0..n).filter(|&b| b != a).collect())).collect();
            (all, PairMode::All)
        }
    };

    let mut total = 0.0;
    let mut used = 0;
    let mut unreachable = 0;
    let mut coincident = 0;
    let mut geo = vec![0.0; n];
    for (src, dsts) in targets {
        let tree = BfsTree::new(graph, src);
        geodesics_from(emb, &tree, &mut geo);
        let mut partial = 0.0;
        for dst in dsts {
            if tree.distance(dst).is_none() {
                unreachable += 1;
                continue;
            }
            let de = dist(emb.row(src), emb.row(dst));
            if de <= SEGMENT_EPS {
                coincident += 1;
                continue;
            }
            partial += geo[dst] / de;
            used += 1;
        }
        total += partial;
    }
    if used == 0 {
        return Err(Error::NoUsablePairs { skipped: unreachable + coincident });
    }
    Ok(DistortionReport {
        rho: total / used as f64,
        mode,
        pairs_used: used,
        skipped_unreachable: unreachable,
        skipped_coincident: coincident,
    })
}

/// Geodesic length from the tree's source to every reachable node, along the
/// tree's paths. Filled in BFS order so each parent is done before its child.
fn geodesics_from(emb: &Embedding, tree: &BfsTree, out: &mut [f64]) {
    let mut order: Vec<usize> = (0..out.len()).filter(|&v| tree.distance(v).is_some()).collect();
    order.sort_by_key(|&v| tree.distance(v));
    for v in order {
        out[v] = match tree.parent(v) {
            Some(p) => out[p] + dist(emb.row(p), emb.row(v)),
            None => 0.0,
        };
    }
}

/// `count` distinct ordered pairs of distinct nodes, drawn uniformly.
pub fn sample_pairs(n: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let max = n * n.saturating_sub(1);
    let count = count.min(max);
    let mut rng = seed::rng(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && seen.insert((a, b)) {
            pairs.push((a, b));
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub satisfied: bool,
    pub max_abs_sum: f64,
}

/// Bound on the accumulated turning along `path`: the largest sum of
/// unsigned turning angles over any contiguous run of interior vertices,
/// compared strictly against π/2. Unsigned angles upper-bound any signed sum,
/// so `satisfied` implies the signed condition. A degenerate vertex counts as
/// a full turn of π.
pub fn theorem_condition_check(emb: &Embedding, path: &PolygonalPath) -> Result<TheoremCheck> {
    if path.len() < 3 {
        return Err(Error::InvalidArgument("condition check needs a path of at least 3 nodes".into()));
    }
    let v = path.nodes();
    // all terms are non-negative, so the whole path is the maximal run
    let max_abs_sum: f64 = (1..v.len() - 1)
        .map(|q| {
            turning_cosine_at(emb.row(v[q - 1]), emb.row(v[q]), emb.row(v[q + 1]))
                .map_or(PI, f64::acos)
        })
        .sum();
    Ok(TheoremCheck { satisfied: max_abs_sum < FRAC_PI_2, max_abs_sum })
}

/// Fraction of paths with at least 3 nodes that satisfy the condition check;
/// `None` when there are no such paths.
pub fn condition_pass_fraction(emb: &Embedding, paths: &PathSet) -> Option<f64> {
    let mut total = 0usize;
    let mut pass = 0usize;
    for p in paths.iter().filter(|p| p.len() >= 3) {
        total += 1;
        if theorem_condition_check(emb, p).map(|c| c.satisfied).unwrap_or(false) {
            pass += 1;
        }
    }
    (total > 0).then(|| pass as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{all_pairs, pair_paths, PathKind, PathSource};
    use proptest::prelude::{prop, prop_assert, prop_assume, proptest};

    fn emb(rows: &[[f64; 2]]) -> Embedding {
        Embedding::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn path(nodes: &[usize]) -> PolygonalPath {
        PolygonalPath::new(nodes.to_vec(), PathKind::Shortest).unwrap()
    }

    fn path_graph(n: usize) -> Graph {
        Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
    }

    #[test]
    fn euclidean_basics() {
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean_distance(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert!(euclidean_distance(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn euclidean_matches_naive_sum() {
        let mut rng = seed::rng(3);
        for _ in 0..100 {
            let a: Vec<f64> = (0..7).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let b: Vec<f64> = (0..7).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let mut s = 0.0;
            for k in 0..7 {
                let t = a[k] - b[k];
                s += t * t;
            }
            assert!((euclidean_distance(&a, &b).unwrap() - s.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn geodesic_segment_sums() {
        let p = path(&[0, 1, 2]);
        assert_eq!(geodesic_distance(&emb(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), &p), 2.0);
        assert_eq!(geodesic_distance(&emb(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]), &p), 2.0);
    }

    #[test]
    fn turning_cosines() {
        let p = path(&[0, 1, 2]);
        let straight = emb(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let right = emb(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        let back = emb(&[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(turning_cosine(&straight, &p, 1).unwrap(), Some(1.0));
        assert_eq!(turning_cosine(&right, &p, 1).unwrap(), Some(0.0));
        assert_eq!(turning_cosine(&back, &p, 1).unwrap(), Some(-1.0));
        assert!(turning_cosine(&straight, &p, 0).is_err());
        assert!(turning_cosine(&straight, &p, 2).is_err());
        let collapsed = emb(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(turning_cosine(&collapsed, &p, 1).unwrap(), None);
    }

    #[test]
    fn field_counts() {
        let e = emb(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        let one = PathSet { paths: vec![path(&[0, 1, 2])], source: PathSource::AllPairs, skipped: 0 };
        let f = curvature_field(&e, &one).unwrap();
        assert_eq!(f.samples.len(), 1);
        assert_eq!(f.samples[0].cosine, 1.0);
        let four = PathSet { paths: vec![path(&[0, 1, 2, 3])], source: PathSource::AllPairs, skipped: 0 };
        let f = curvature_field(&e, &four).unwrap();
        assert_eq!(f.samples.len(), 2);
        assert_eq!(f.at_node(2), vec![1.0]);
        let empty = PathSet { paths: vec![], source: PathSource::AllPairs, skipped: 0 };
        assert!(curvature_field(&e, &empty).is_err());
    }

    #[test]
    fn square_corners_are_right_angles() {
        let e = emb(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        // the four two-edge paths around the 4-cycle, one centred at each corner
        let paths = [[3, 0, 1], [0, 1, 2], [1, 2, 3], [2, 3, 0]]
            .iter()
            .map(|p| path(p))
            .collect();
        let set = PathSet { paths, source: PathSource::AllPairs, skipped: 0 };
        let f = curvature_field(&e, &set).unwrap();
        assert_eq!(f.samples.len(), 4);
        assert!(f.samples.iter().all(|s| s.cosine == 0.0));
        assert_eq!(f.by_node.len(), 4);
    }

    #[test]
    fn straight_line_has_unit_distortion() {
        let g = path_graph(4);
        let e = emb(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        let r = distortion(&e, &g, None).unwrap();
        assert_eq!(r.rho, 1.0);
        assert_eq!(r.pairs_used, 12);
    }

    #[test]
    fn right_angle_distortion() {
        let g = path_graph(3);
        let e = emb(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        // ordered pairs: four adjacent ratios of 1, two end-to-end ratios of 2/sqrt(2)
        let expected = (4.0 + 2.0 * 2.0 / 2f64.sqrt()) / 6.0;
        let r = distortion(&e, &g, None).unwrap();
        assert!((r.rho - expected).abs() < 1e-12);
        assert!((expected - (4.0 + 2.0 * 2f64.sqrt()) / 6.0).abs() < 1e-15);
    }

    #[test]
    fn distortion_skips_and_errors() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let e = emb(&[[0.0, 0.0], [1.0, 0.0], [0.0, 5.0], [0.0, 5.0]]);
        let r = distortion(&e, &g, None).unwrap();
        assert_eq!(r.skipped_unreachable, 8);
        assert_eq!(r.skipped_coincident, 2);
        assert_eq!(r.pairs_used, 2);
        assert!(matches!(distortion(&e, &g, Some(&[(2, 3)])), Err(Error::NoUsablePairs { .. })));
        assert!(distortion(&e, &path_graph(3), None).is_err());
    }

    #[test]
    fn explicit_pairs_mode() {
        let g = path_graph(3);
        let e = emb(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        let r = distortion(&e, &g, Some(&[(0, 2)])).unwrap();
        assert_eq!(r.mode, PairMode::Explicit);
        assert!((r.rho - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sampled_pairs_are_distinct() {
        let p = sample_pairs(5, 100, 1);
        assert_eq!(p.len(), 20);
        let s: HashSet<_> = p.iter().collect();
        assert_eq!(s.len(), 20);
        assert_eq!(sample_pairs(50, 30, 9), sample_pairs(50, 30, 9));
    }

    #[test]
    fn condition_check_cases() {
        let straight = Embedding::from_rows(&(0..6).map(|i| vec![i as f64, 0.0]).collect::<Vec<_>>()).unwrap();
        let c = theorem_condition_check(&straight, &path(&[0, 1, 2, 3, 4, 5])).unwrap();
        assert_eq!(c.max_abs_sum, 0.0);
        assert!(c.satisfied);

        let right = emb(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        let c = theorem_condition_check(&right, &path(&[0, 1, 2])).unwrap();
        assert_eq!(c.max_abs_sum, FRAC_PI_2);
        assert!(!c.satisfied);

        let t = PI / 6.0;
        let two_turns = emb(&[[0.0, 0.0], [1.0, 0.0], [1.0 + t.cos(), t.sin()], [
            1.0 + t.cos() + (2.0 * t).cos(),
            t.sin() + (2.0 * t).sin(),
        ]]);
        let c = theorem_condition_check(&two_turns, &path(&[0, 1, 2, 3])).unwrap();
        assert!((c.max_abs_sum - PI / 3.0).abs() < 1e-9);
        assert!(c.satisfied);
        assert!(theorem_condition_check(&right, &path(&[0, 1])).is_err());
    }

    #[test]
    fn pass_fraction_ignores_short_paths() {
        let g = path_graph(3);
        let e = emb(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let set = pair_paths(&g, &all_pairs(&[0, 1, 2]), PathSource::AllPairs).unwrap();
        assert_eq!(condition_pass_fraction(&e, &set), Some(1.0));
        let short = pair_paths(&g, &[(0, 1)], PathSource::AllPairs).unwrap();
        assert_eq!(condition_pass_fraction(&e, &short), None);
    }

    fn rotate(e: &Embedding, angle: f64, shift: (f64, f64)) -> Embedding {
        let rows: Vec<Vec<f64>> = e
            .rows()
            .map(|r| {
                vec![
                    angle.cos() * r[0] - angle.sin() * r[1] + shift.0,
                    angle.sin() * r[0] + angle.cos() * r[1] + shift.1,
                ]
            })
            .collect();
        Embedding::from_rows(&rows).unwrap()
    }

    proptest! {
        #[test]
        fn geodesic_bounds_endpoint_distance(
            pts in prop::collection::vec(prop::collection::vec(-10f64..10.0, 3), 2..9)
        ) {
            let e = Embedding::from_rows(&pts).unwrap();
            let p = path(&(0..pts.len()).collect::<Vec<_>>());
            let dm = geodesic_distance(&e, &p);
            let de = euclidean_distance(e.row(p.source()), e.row(p.target())).unwrap();
            prop_assert!(dm >= de - 1e-12);
            for q in 1..pts.len() - 1 {
                if let Some(c) = turning_cosine(&e, &p, q).unwrap() {
                    prop_assert!((-1.0..=1.0).contains(&c));
                }
            }
        }

        #[test]
        fn distortion_is_isometry_invariant(
            pts in prop::collection::vec((-5f64..5.0, -5f64..5.0), 6),
            angle in 0f64..std::f64::consts::TAU,
            dx in -3f64..3.0,
            dy in -3f64..3.0,
        ) {
            let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (1, 4)]).unwrap();
            let e = Embedding::from_rows(&pts.iter().map(|&(x, y)| vec![x, y]).collect::<Vec<_>>()).unwrap();
            let base = distortion(&e, &g, None);
            prop_assume!(base.is_ok());
            let base = base.unwrap();
            prop_assume!(base.skipped_coincident == 0);
            let moved = distortion(&rotate(&e, angle, (dx, dy)), &g, None).unwrap();
            prop_assert!(((moved.rho - base.rho) / base.rho).abs() < 1e-9);
            prop_assert!(base.rho >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn straight_geodesic_equals_chord() {
        let e = Embedding::from_rows(&(0..5).map(|i| vec![i as f64 * 0.5, i as f64]).collect::<Vec<_>>()).unwrap();
        let p = path(&[0, 1, 2, 3, 4]);
        let dm = geodesic_distance(&e, &p);
        let de = euclidean_distance(e.row(0), e.row(4)).unwrap();
        assert!((dm - de).abs() < 1e-9);
        for q in 1..4 {
            assert!((turning_cosine(&e, &p, q).unwrap().unwrap() - 1.0).abs() < 1e-9);
        }
    }
}

