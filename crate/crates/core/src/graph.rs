//! Undirected weighted graphs in compressed sparse row form.
//!
//! Nodes are dense 0-based indices. The adjacency is stored symmetrically
//! (each undirected edge appears in both incident rows); a self-loop is a
//! single entry on the diagonal and contributes its weight to the degree
//! once. Degrees are row sums of the adjacency and must all be positive.

use std::io::BufRead;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Positive per-node degree vector, `d_i = sum_j A(i,j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector(Vec<f64>);

impl DegreeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &d) in values.iter().enumerate() {
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::IsolatedNode(i));
            }
        }
        Ok(DegreeVector(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Entrywise power `d_i^e` as a plain vector.
    pub fn powf(&self, e: f64) -> Vec<f64> {
        self.0.iter().map(|d| d.powf(e)).collect()
    }
}

impl std::ops::Index<usize> for DegreeVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Undirected weighted graph, CSR adjacency, dense 0-based node ids.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    weights: Vec<f64>,
    degrees: DegreeVector,
    volume: f64,
    has_self_loop: bool,
}

impl Graph {
    /// Builds a graph over nodes `0..n` from undirected edges `(u, v, w)`.
    ///
    /// Each undirected edge is listed once in any orientation; duplicates
    /// accumulate their weights. Self-loop entries `(u, u, w)` are allowed
    /// here (summary graphs produce them) and count once in the degree.
    /// Weights must be positive and finite. Every node must end up with a
    /// positive degree.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one node".into()));
        }
        let mut canon: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if w <= 0.0 || !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
            canon.push((u.min(v), u.max(v), w));
        }
        canon.sort_by_key(|&(u, v, _)| (u, v));

        // Merge duplicates, then mirror off-diagonal entries.
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(canon.len());
        for (u, v, w) in canon {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == v => last.2 += w,
                _ => merged.push((u, v, w)),
            }
        }

        let mut deg_count = vec![0usize; n];
        for &(u, v, _) in &merged {
            deg_count[u] += 1;
            if u != v {
                deg_count[v] += 1;
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + deg_count[i];
        }
        let nnz = row_ptr[n];
        let mut col_idx = vec![0usize; nnz];
        let mut weights = vec![0.0f64; nnz];
        let mut cursor = row_ptr.clone();
        let mut has_self_loop = false;
        for &(u, v, w) in &merged {
            col_idx[cursor[u]] = v;
            weights[cursor[u]] = w;
            cursor[u] += 1;
            if u != v {
                col_idx[cursor[v]] = u;
                weights[cursor[v]] = w;
                cursor[v] += 1;
            } else {
                has_self_loop = true;
            }
        }
        // Rows come out sorted by column because merged edges are sorted
        // and mirrored entries (v, u) arrive in increasing u per row v.

        let mut degrees = vec![0.0f64; n];
        for i in 0..n {
            degrees[i] = weights[row_ptr[i]..row_ptr[i + 1]].iter().sum();
        }
        let degrees = DegreeVector::new(degrees)?;
        let volume = kahan_sum(degrees.as_slice().iter().copied());

        Ok(Graph {
            n,
            row_ptr,
            col_idx,
            weights,
            degrees,
            volume,
            has_self_loop,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored undirected edges (self-loops count once).
    pub fn edge_count(&self) -> usize {
        let off_diag = self
            .col_idx
            .iter()
            .enumerate()
            .filter(|&(k, &j)| self.row_of(k) != j)
            .count();
        let diag = self.col_idx.len() - off_diag;
        off_diag / 2 + diag
    }

    fn row_of(&self, k: usize) -> usize {
        // Binary search over row_ptr for the row owning entry k.
        match self.row_ptr.binary_search(&k) {
            Ok(mut i) => {
                while i + 1 < self.row_ptr.len() && self.row_ptr[i + 1] == k {
                    i += 1;
                }
                i
            }
            Err(i) => i - 1,
        }
    }

    pub fn degrees(&self) -> &DegreeVector {
        &self.degrees
    }

    /// vol(G) = sum of all degrees.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn has_self_loop(&self) -> bool {
        self.has_self_loop
    }

    /// Neighbors of `i` with edge weights, ascending by neighbor id.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .zip(&self.weights[lo..hi])
            .map(|(&j, &w)| (j, w))
    }

    /// Each undirected edge once, as `(u, v, w)` with `u <= v`.
    pub fn edges_undirected(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for (j, w) in self.neighbors(i) {
                if i <= j {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Adds a unit self-loop to every node. Errors if any node already
    /// has one.
    pub fn augment(&self) -> Result<Graph> {
        for i in 0..self.n {
            if self.neighbors(i).any(|(j, _)| j == i) {
                return Err(Error::SelfLoop(i));
            }
        }
        let mut edges = self.edges_undirected();
        for i in 0..self.n {
            edges.push((i, i, 1.0));
        }
        Graph::from_edges(self.n, &edges)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, w) in self.neighbors(i) {
                a[[i, j]] = w;
            }
        }
        a
    }

    /// Dense symmetrically normalized adjacency `D^{-1/2} A D^{-1/2}`.
    /// All its eigenvalues lie in [-1, 1]. Allocates n^2 entries.
    pub fn normalized_adjacency(&self) -> Array2<f64> {
        let inv_sqrt: Vec<f64> = self.degrees.as_slice().iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut a = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, w) in self.neighbors(i) {
                a[[i, j]] = w * inv_sqrt[i] * inv_sqrt[j];
            }
        }
        a
    }
}

/// Left-multiplication by an adjacency operator: `A * X` for dense `X`.
/// Implemented for sparse graphs and for dense matrices so numeric
/// routines run identically on either representation.
pub trait Apply {
    fn rows(&self) -> usize;
    fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64>;
}

impl Apply for Graph {
    fn rows(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n, "operand row count");
        let mut out = Array2::zeros((self.n, x.ncols()));
        for i in 0..self.n {
            let mut row = out.row_mut(i);
            for (j, w) in self.neighbors(i) {
                row.scaled_add(w, &x.row(j));
            }
        }
        out
    }
}

impl Apply for Array2<f64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.nrows(), "operand row count");
        self.dot(x)
    }
}

/// Graph loaded from an edge list, with the mapping back to the ids the
/// file used. `ids[k]` is the original id of dense node `k`; the mapping
/// is ascending, so a file whose ids are already `0..n` maps identically.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub ids: Vec<u64>,
}

impl LoadedGraph {
    pub fn dense_index_of(&self, original: u64) -> Option<usize> {
        self.ids.binary_search(&original).ok()
    }
}

/// Parses a whitespace-separated edge list: one `src dst` (or
/// `src dst weight` with `weighted`) per line, `#` lines and blank lines
/// skipped. Self-loop lines are rejected. Duplicate edges accumulate.
/// Sparse id spaces are re-indexed densely; the mapping is returned.
pub fn load_edge_list<R: BufRead>(reader: R, weighted: bool) -> Result<LoadedGraph> {
    let mut raw: Vec<(u64, u64, f64)> = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let expected = if weighted { 3 } else { 2 };
        if fields.len() != expected {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        let parse_id = |s: &str| -> Result<u64> {
            s.parse::<u64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad node id {s:?}"),
            })
        };
        let u = parse_id(fields[0])?;
        let v = parse_id(fields[1])?;
        if u == v {
            return Err(Error::SelfLoopLine { line: lineno, node: u });
        }
        let w = if weighted {
            let w: f64 = fields[2].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad weight {:?}", fields[2]),
            })?;
            if w <= 0.0 || !w.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("weight must be positive, found {w}"),
                });
            }
            w
        } else {
            1.0
        };
        raw.push((u, v, w));
    }
    if raw.is_empty() {
        return Err(Error::InvalidArgument("edge list has no edges".into()));
    }

    let mut ids: Vec<u64> = raw.iter().flat_map(|&(u, v, _)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    let dense = |id: u64| ids.binary_search(&id).unwrap();
    let edges: Vec<(usize, usize, f64)> =
        raw.iter().map(|&(u, v, w)| (dense(u), dense(v), w)).collect();
    let graph = Graph::from_edges(ids.len(), &edges)?;
    Ok(LoadedGraph { graph, ids })
}

/// Frobenius norm of a dense matrix.
pub fn frobenius_norm(m: &ArrayView2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest absolute entry of a dense matrix.
pub fn max_abs(m: &ArrayView2<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Compensated summation; keeps long positive sums accurate to a few ulps.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}
