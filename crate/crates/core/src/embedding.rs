//! Dense row-major embedding matrix and its text persistence format.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// An `n × d` matrix; row `i` is the representation of node `i`. The same
/// type holds gradients with respect to an embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Embedding {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self { n, d, data: vec![0.0; n * d] }
    }

    pub fn from_vec(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch { left: data.len(), right: n * d });
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { left: r.len(), right: d });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), d, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn check_shape(&self, other: &Self) {
        assert!(self.n == other.n && self.d == other.d, "shape mismatch");
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, other: &Self, alpha: f64) {
        self.check_shape(other);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// `self + alpha * other`
    pub fn plus_scaled(&self, other: &Self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, alpha);
        out
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.check_shape(other);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Text form: a header line `n d`, then one line of `d` space-separated
    /// decimals per node in id order. Values use the shortest representation
    /// that round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 20);
        writeln!(out, "{} {}", self.n, self.d).unwrap();
        for row in self.rows() {
            for (k, x) in row.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                write!(out, "{x}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: 1, message: format!("bad header: {e}") })?;
        let [n, d] = dims[..] else {
            return Err(Error::Parse { line: 1, message: "header must be `n d`".into() });
        };
        let mut data = Vec::with_capacity(n * d);
        let mut rows = 0;
        for (lineno, line) in lines {
            let before = data.len();
            for tok in line.split_whitespace() {
                let x: f64 = tok.parse().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad value `{tok}`: {e}"),
                })?;
                data.push(x);
            }
            if data.len() - before != d {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected {d} values, found {}", data.len() - before),
                });
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::Parse { line: rows + 1, message: format!("expected {n} rows, found {rows}") });
        }
        Self::from_vec(n, d, data)
    }
}

/// Sidecar id map: the original token of each row, one per line.
pub fn id_map_text(graph: &Graph) -> String {
    let mut out = String::new();
    for l in graph.labels() {
        out.push_str(l);
        out.push('\n');
    }
    out
}

/// Parse a sidecar id map written by [`id_map_text`].
pub fn parse_id_map(text: &str) -> Vec<String> {
    text.lines().map(|l| l.trim().to_owned()).filter(|l| !l.is_empty()).collect()
}
