//! Curvature regularizers: the flatness penalty over all shortest paths,
//! over shortest paths between sampled nodes, or over acyclic random walks,
//! with its exact gradient.
//!
//! Each interior vertex `q` of a cached path contributes `1 - cos θ_q`, where
//! `θ_q` is the turning angle between the incoming segment
//! `u = x_q - x_{q-1}` and the outgoing segment `v = x_{q+1} - x_q`. The
//! penalty vanishes exactly when every cached path is embedded straight.

use std::io::{self, Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::geometry::SEGMENT_EPS;
use crate::graph::{
    all_pairs, pair_paths, random_walks, sample_node_set, Graph, PathKind, PathSet, PathSource,
    PolygonalPath, WalkConfig,
};

/// Largest graph accepted by [`RegularizerKind::Full`].
pub const FULL_KIND_LIMIT: usize = 1500;

pub const DEFAULT_SAMPLE_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegularizerKind {
    None,
    /// Shortest paths between every pair of nodes.
    Full,
    /// Shortest paths between every pair within a uniform node sample.
    Sampled { sample_size: usize, seed: u64 },
    /// Acyclic random walks.
    Walk,
}

impl RegularizerKind {
    pub fn is_none(&self) -> bool {
        matches!(self, Self::None)
    }
}

/// Paths the regularizer is evaluated on, fixed at preprocessing time.
#[derive(Debug, Clone)]
pub struct RegularizerState {
    pub kind: RegularizerKind,
    pub paths: Arc<PathSet>,
}

/// Build the path cache for `kind`.
///
/// `Sampled` sizes above `n` are clamped to `n`. `Walk` reuses `shared_walks`
/// when given (the skip-gram embedder's corpus), otherwise walks are drawn
/// with `walk` and `seed`.
pub fn build_state(
    graph: &Graph,
    kind: RegularizerKind,
    walk: &WalkConfig,
    seed: u64,
    shared_walks: Option<Arc<PathSet>>,
) -> Result<RegularizerState> {
    let paths = match kind {
        RegularizerKind::None => {
            return Err(Error::InvalidArgument("no regularizer selected".into()));
        }
        RegularizerKind::Full => {
            let n = graph.n();
            if n > FULL_KIND_LIMIT {
                return Err(Error::Capacity { n, limit: FULL_KIND_LIMIT });
            }
            let nodes: Vec<usize> = (0..n).collect();
            Arc::new(pair_paths(graph, &all_pairs(&nodes), PathSource::AllPairs)?)
        }
        RegularizerKind::Sampled { sample_size, seed } => {
            if sample_size < 2 {
                return Err(Error::InvalidArgument(format!("sample size {sample_size} below 2")));
            }
            let nodes = sample_node_set(graph, sample_size.min(graph.n()), seed)?;
            let pairs = all_pairs(&nodes);
            Arc::new(pair_paths(graph, &pairs, PathSource::SampledPairs { nodes })?)
        }
        RegularizerKind::Walk => match shared_walks {
            Some(w) => {
                if !matches!(w.source, PathSource::RandomWalk { .. }) {
                    return Err(Error::InvalidArgument("shared path set is not a walk set".into()));
                }
                w
            }
            None => Arc::new(random_walks(graph, walk, seed)?),
        },
    };
    Ok(RegularizerState { kind, paths })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaLoss {
    pub loss: f64,
    /// Interior vertices that contributed.
    pub samples: usize,
    /// Interior vertices skipped for a degenerate segment.
    pub degenerate: usize,
}

fn for_each_vertex(paths: &PathSet, mut f: impl FnMut(usize, usize, usize)) {
    for p in paths.iter() {
        for w in p.nodes().windows(3) {
            f(w[0], w[1], w[2]);
        }
    }
}

pub fn omega_loss(emb: &Embedding, state: &RegularizerState) -> Result<OmegaLoss> {
    let d = emb.dim();
    let mut out = OmegaLoss { loss: 0.0, samples: 0, degenerate: 0 };
    let mut u = vec![0.0; d];
    let mut v = vec![0.0; d];
    for_each_vertex(&state.paths, |a, b, c| {
        match segment_cosine(emb, a, b, c, &mut u, &mut v) {
            Some((cos, _, _)) => {
                out.loss += 1.0 - cos.clamp(-1.0, 1.0);
                out.samples += 1;
            }
            None => out.degenerate += 1,
        }
    });
    if out.samples == 0 {
        return Err(Error::EmptyRegularizer { degenerate: out.degenerate });
    }
    Ok(out)
}

pub fn omega_gradient(emb: &Embedding, state: &RegularizerState) -> Result<Embedding> {
    omega_loss_grad(emb, state).map(|(_, g)| g)
}

/// Fills `u`, `v` with the two segment vectors at `b` and returns
/// `(cos, |u|, |v|)` with the cosine unclamped.
#[inline]
fn segment_cosine(
    emb: &Embedding,
    a: usize,
    b: usize,
    c: usize,
    u: &mut [f64],
    v: &mut [f64],
) -> Option<(f64, f64, f64)> {
    let (xa, xb, xc) = (emb.row(a), emb.row(b), emb.row(c));
    let mut uu = 0.0;
    let mut vv = 0.0;
    let mut uv = 0.0;
    for k in 0..u.len() {
        u[k] = xb[k] - xa[k];
        v[k] = xc[k] - xb[k];
        uu += u[k] * u[k];
        vv += v[k] * v[k];
        uv += u[k] * v[k];
    }
    let (nu, nv) = (uu.sqrt(), vv.sqrt());
    if nu <= SEGMENT_EPS || nv <= SEGMENT_EPS {
        return None;
    }
    Some((uv / (nu * nv), nu, nv))
}

/// Loss and gradient in one pass over the cached paths.
///
/// With `c = u·v / (|u||v|)`:
/// `∂c/∂u = v/(|u||v|) - c·u/|u|²` and `∂c/∂v = u/(|u||v|) - c·v/|v|²`.
/// Since `u` depends on `x_b - x_a` and `v` on `x_c - x_b`, the penalty
/// `1 - c` sends `+∂c/∂u` to row `a`, `∂c/∂v - ∂c/∂u` to row `b` and
/// `-∂c/∂v` to row `c`.
pub fn omega_loss_grad(emb: &Embedding, state: &RegularizerState) -> Result<(OmegaLoss, Embedding)> {
    let d = emb.dim();
    let mut grad = Embedding::zeros(emb.n(), d);
    let mut out = OmegaLoss { loss: 0.0, samples: 0, degenerate: 0 };
    let mut u = vec![0.0; d];
    let mut v = vec![0.0; d];
    let mut du = vec![0.0; d];
    let mut dv = vec![0.0; d];
    for_each_vertex(&state.paths, |a, b, c| {
        let Some((cos, nu, nv)) = segment_cosine(emb, a, b, c, &mut u, &mut v) else {
            out.degenerate += 1;
            return;
        };
        out.loss += 1.0 - cos.clamp(-1.0, 1.0);
        out.samples += 1;
        let inv = 1.0 / (nu * nv);
        let cu = cos / (nu * nu);
        let cv = cos / (nv * nv);
        for k in 0..d {
            du[k] = v[k] * inv - cu * u[k];
            dv[k] = u[k] * inv - cv * v[k];
        }
        for (k, g) in grad.row_mut(a).iter_mut().enumerate() {
            *g += du[k];
        }
        for (k, g) in grad.row_mut(b).iter_mut().enumerate() {
            *g += dv[k] - du[k];
        }
        for (k, g) in grad.row_mut(c).iter_mut().enumerate() {
            *g -= dv[k];
        }
    });
    if out.samples == 0 {
        return Err(Error::EmptyRegularizer { degenerate: out.degenerate });
    }
    Ok((out, grad))
}

const CACHE_MAGIC: &[u8; 8] = b"CRPATHS1";

/// Write a path set to a binary sidecar keyed by `key` (callers hash the
/// graph, regularizer kind and seed into it).
pub fn write_path_cache<W: Write>(mut w: W, key: u64, paths: &PathSet) -> io::Result<()> {
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&key.to_le_bytes())?;
    match &paths.source {
        PathSource::AllPairs => w.write_all(&[0])?,
        PathSource::SampledPairs { nodes } => {
            w.write_all(&[1])?;
            write_u64(&mut w, nodes.len() as u64)?;
            for &v in nodes {
                write_u64(&mut w, v as u64)?;
            }
        }
        PathSource::RandomWalk { walks_per_node, walk_length } => {
            w.write_all(&[2])?;
            write_u64(&mut w, *walks_per_node as u64)?;
            write_u64(&mut w, *walk_length as u64)?;
        }
    }
    write_u64(&mut w, paths.skipped as u64)?;
    write_u64(&mut w, paths.len() as u64)?;
    for p in paths.iter() {
        w.write_all(&[matches!(p.kind(), PathKind::Walk) as u8])?;
        write_u64(&mut w, p.len() as u64)?;
        for &v in p.nodes() {
            write_u64(&mut w, v as u64)?;
        }
    }
    Ok(())
}

/// Read a sidecar written by [`write_path_cache`]. Returns `Ok(None)` when
/// the stored key differs from `key`.
pub fn read_path_cache<R: Read>(mut r: R, key: u64) -> Result<Option<PathSet>> {
    let bad = |m: &str| Error::Io(io::Error::new(io::ErrorKind::InvalidData, m.to_owned()));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(bad("not a path cache file"));
    }
    if read_u64(&mut r)? != key {
        return Ok(None);
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let source = match tag[0] {
        0 => PathSource::AllPairs,
        1 => {
            let k = read_u64(&mut r)? as usize;
            let nodes = (0..k).map(|_| read_u64(&mut r).map(|v| v as usize)).collect::<io::Result<_>>()?;
            PathSource::SampledPairs { nodes }
        }
        2 => PathSource::RandomWalk {
            walks_per_node: read_u64(&mut r)? as usize,
            walk_length: read_u64(&mut r)? as usize,
        },
        _ => return Err(bad("unknown path source tag")),
    };
    let skipped = read_u64(&mut r)? as usize;
    let count = read_u64(&mut r)? as usize;
    let mut paths = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut tag)?;
        let kind = if tag[0] == 1 { PathKind::Walk } else { PathKind::Shortest };
        let len = read_u64(&mut r)? as usize;
        let nodes = (0..len).map(|_| read_u64(&mut r).map(|v| v as usize)).collect::<io::Result<_>>()?;
        paths.push(PolygonalPath::new(nodes, kind)?);
    }
    Ok(Some(PathSet { paths, source, skipped }))
}

fn write_u64<W: Write>(w: &mut W, x: u64) -> io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::curvature_field;
    use crate::graph::WalkStrategy;
    use crate::seed;
    use rand::Rng;

    fn path_graph(n: usize) -> Graph {
        Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
    }

    fn state_of(paths: Vec<Vec<usize>>) -> RegularizerState {
        let paths = paths.into_iter().map(|p| PolygonalPath::new(p, PathKind::Shortest).unwrap()).collect();
        RegularizerState {
            kind: RegularizerKind::Full,
            paths: Arc::new(PathSet { paths, source: PathSource::AllPairs, skipped: 0 }),
        }
    }

    fn random_embedding(n: usize, d: usize, s: u64) -> Embedding {
        let mut rng = seed::rng(s);
        Embedding::from_vec(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn collinear_paths_cost_nothing() {
        let e = Embedding::from_rows(&(0..5).map(|i| vec![i as f64, 2.0 * i as f64]).collect::<Vec<_>>()).unwrap();
        let st = state_of(vec![vec![0, 1, 2, 3, 4], vec![1, 2, 3]]);
        assert!(omega_loss(&e, &st).unwrap().loss.abs() < 1e-12);
        let g = omega_gradient(&e, &st).unwrap();
        assert!(g.as_slice().iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn right_angle_costs_one() {
        let e = Embedding::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let st = state_of(vec![vec![0, 1, 2]]);
        assert_eq!(omega_loss(&e, &st).unwrap().loss, 1.0);
    }

    #[test]
    fn loss_matches_curvature_field() {
        let e = random_embedding(8, 3, 11);
        let st = state_of(vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7, 0], vec![2, 6]]);
        let field = curvature_field(&e, &st.paths).unwrap();
        let expected: f64 = field.samples.iter().map(|s| 1.0 - s.cosine).sum();
        let got = omega_loss(&e, &st).unwrap();
        assert!((got.loss - expected).abs() < 1e-12);
        assert_eq!(got.samples, field.samples.len());
    }

    #[test]
    fn degenerate_vertices_are_skipped() {
        let e = Embedding::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let st = state_of(vec![vec![0, 1, 2, 3]]);
        let l = omega_loss(&e, &st).unwrap();
        assert_eq!((l.samples, l.degenerate), (1, 1));
        let st = state_of(vec![vec![0, 1, 2]]);
        assert!(matches!(omega_loss(&e, &st), Err(Error::EmptyRegularizer { degenerate: 1 })));
        assert!(omega_gradient(&e, &st).is_err());
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let e = random_embedding(10, 4, 5);
        let st = state_of(vec![vec![0, 1, 2, 3, 4], vec![5, 6, 7], vec![9, 8, 3, 2]]);
        let g = omega_gradient(&e, &st).unwrap();
        for k in 0..4 {
            let s: f64 = g.rows().map(|r| r[k]).sum();
            assert!(s.abs() < 1e-9);
        }
    }

    #[test]
    fn scale_invariance() {
        let e = random_embedding(6, 2, 8);
        let st = state_of(vec![vec![0, 1, 2, 3, 4, 5]]);
        let base = omega_loss(&e, &st).unwrap().loss;
        let mut scaled = e.clone();
        scaled.scale(37.5);
        let l = omega_loss(&scaled, &st).unwrap().loss;
        assert!(((l - base) / base).abs() < 1e-9);
    }

    #[test]
    fn build_full_and_sampled() {
        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let walk = WalkConfig::default();
        let st = build_state(&tri, RegularizerKind::Full, &walk, 0, None).unwrap();
        assert_eq!(st.paths.len(), 3);

        let g = path_graph(10);
        let st = build_state(&g, RegularizerKind::Sampled { sample_size: 3, seed: 4 }, &walk, 0, None).unwrap();
        assert_eq!(st.paths.len(), 3);
        assert!(matches!(st.paths.source, PathSource::SampledPairs { ref nodes } if nodes.len() == 3));
    }

    #[test]
    fn full_kind_is_capacity_gated() {
        let g = path_graph(FULL_KIND_LIMIT + 1);
        let err = build_state(&g, RegularizerKind::Full, &WalkConfig::default(), 0, None).unwrap_err();
        assert!(matches!(err, Error::Capacity { limit: FULL_KIND_LIMIT, .. }));
    }

    #[test]
    fn walk_kind_shares_the_given_walks() {
        let g = path_graph(6);
        let cfg = WalkConfig { walks_per_node: 2, walk_length: 5, strategy: WalkStrategy::Uniform };
        let walks = Arc::new(random_walks(&g, &cfg, 3).unwrap());
        let st = build_state(&g, RegularizerKind::Walk, &cfg, 3, Some(walks.clone())).unwrap();
        assert!(Arc::ptr_eq(&st.paths, &walks));
        let own = build_state(&g, RegularizerKind::Walk, &cfg, 3, None).unwrap();
        assert_eq!(*own.paths, *walks);
    }

    #[test]
    fn path_cache_round_trip() {
        let g = path_graph(12);
        let st = build_state(&g, RegularizerKind::Sampled { sample_size: 5, seed: 2 }, &WalkConfig::default(), 0, None)
            .unwrap();
        let mut buf = Vec::new();
        write_path_cache(&mut buf, 77, &st.paths).unwrap();
        assert_eq!(read_path_cache(&buf[..], 77).unwrap().as_ref(), Some(&*st.paths));
        assert!(read_path_cache(&buf[..], 78).unwrap().is_none());
        assert!(read_path_cache(&b"garbage!"[..], 1).is_err());
    }
}
