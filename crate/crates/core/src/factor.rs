//! Random-walk co-occurrence matrices and their truncated factorization.
//!
//! The target matrix is the windowed walk statistic
//! `S = vol(G) / (b T) * sum_{tau=1..T} (D^-1 A)^tau D^-1`
//! followed by an elementwise log: `log(max(1, S))` (truncated, the
//! default) or `log(S + eps)` (shifted). `T = 1` is the first-order
//! special case. Embeddings are `U_d sqrt(Sigma_d)` from a truncated SVD.
//!
//! The pre-log statistic of a degree-proportional reconstruction factors
//! exactly through the summary graph: `S(A_r) = R S_s R^T` with the
//! indicator restoration (`c = 1`), which is why summary embeddings can
//! be computed small and expanded afterwards.

use std::io::{BufRead, Write};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::{Apply, DegreeVector, Graph};
use crate::linmap::{LinearMap, MapRole};
use crate::summarize::SummaryGraph;
use crate::svd::truncated_svd;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogMode {
    /// `log(max(1, S))`; sparse and nonnegative.
    Truncated,
    /// `log(S + eps)`; dense, keeps small co-occurrences.
    Shifted(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizeParams {
    /// Window size `T >= 1`.
    pub window: u32,
    /// Negative-sample weight `b > 0`.
    pub neg: f64,
    pub log_mode: LogMode,
}

impl FactorizeParams {
    pub fn new(window: u32, neg: f64, log_mode: LogMode) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidArgument("window must be at least 1".into()));
        }
        if neg <= 0.0 || !neg.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "negative-sample weight must be positive, got {neg}"
            )));
        }
        if let LogMode::Shifted(eps) = log_mode {
            if eps <= 0.0 || !eps.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "shift eps must be positive, got {eps}"
                )));
            }
        }
        Ok(FactorizeParams { window, neg, log_mode })
    }
}

impl Default for FactorizeParams {
    fn default() -> Self {
        FactorizeParams { window: 10, neg: 1.0, log_mode: LogMode::Truncated }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Direct,
    Summary,
    Restored,
}

/// Node embeddings, one row per node, tagged with how they were produced.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    pub values: Array2<f64>,
    pub provenance: Provenance,
}

impl EmbeddingMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }
}

/// Pre-log walk statistic `vol / (b T) * sum_{tau<=T} (D^-1 A)^tau D^-1`
/// for any adjacency operator with the given degrees and volume.
pub fn walk_statistic<A: Apply>(
    adj: &A,
    degrees: &DegreeVector,
    volume: f64,
    params: &FactorizeParams,
) -> Array2<f64> {
    let n = degrees.len();
    assert_eq!(adj.rows(), n, "adjacency and degree sizes");
    let inv_d: Vec<f64> = degrees.as_slice().iter().map(|d| 1.0 / d).collect();

    let mut x = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        x[[i, i]] = inv_d[i];
    }
    let mut acc = Array2::<f64>::zeros((n, n));
    for _ in 0..params.window {
        x = adj.apply(&x.view());
        for (i, mut row) in x.rows_mut().into_iter().enumerate() {
            let v = inv_d[i];
            row.mapv_inplace(|e| e * v);
        }
        acc += &x;
    }
    let scale = volume / (params.neg * params.window as f64);
    acc.mapv_inplace(|e| e * scale);
    acc
}

/// Pre-log statistics at several window sizes sharing one walk chain.
/// `windows` must be ascending, deduplicated, and at least 1. Each
/// snapshot is bit for bit what [`walk_statistic`] returns for that
/// window.
pub fn walk_statistic_grid<A: Apply>(
    adj: &A,
    degrees: &DegreeVector,
    volume: f64,
    neg: f64,
    windows: &[u32],
) -> Result<Vec<(u32, Array2<f64>)>> {
    if windows.is_empty() || windows[0] == 0 || windows.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "windows must be ascending, deduplicated, and at least 1".into(),
        ));
    }
    if neg <= 0.0 || !neg.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "negative-sample weight must be positive, got {neg}"
        )));
    }
    let n = degrees.len();
    assert_eq!(adj.rows(), n, "adjacency and degree sizes");
    let inv_d: Vec<f64> = degrees.as_slice().iter().map(|d| 1.0 / d).collect();

    let mut x = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        x[[i, i]] = inv_d[i];
    }
    let mut acc = Array2::<f64>::zeros((n, n));
    let mut out = Vec::with_capacity(windows.len());
    let max_window = *windows.last().unwrap();
    for step in 1..=max_window {
        x = adj.apply(&x.view());
        for (i, mut row) in x.rows_mut().into_iter().enumerate() {
            let v = inv_d[i];
            row.mapv_inplace(|e| e * v);
        }
        acc += &x;
        if windows.contains(&step) {
            let scale = volume / (neg * step as f64);
            out.push((step, acc.mapv(|e| e * scale)));
        }
    }
    Ok(out)
}

/// Elementwise log transform.
pub fn apply_log(m: &mut Array2<f64>, mode: LogMode) {
    match mode {
        LogMode::Truncated => m.mapv_inplace(|x| if x > 1.0 { x.ln() } else { 0.0 }),
        LogMode::Shifted(eps) => m.mapv_inplace(|x| (x + eps).ln()),
    }
}

fn check_dense_limit(n: usize, dense_limit: usize) -> Result<()> {
    if n > dense_limit {
        return Err(Error::DenseLimit { n, limit: dense_limit });
    }
    Ok(())
}

/// Windowed walk matrix of a graph, log applied. Dense `n x n`.
pub fn deepwalk_matrix(g: &Graph, params: &FactorizeParams, dense_limit: usize) -> Result<Array2<f64>> {
    check_dense_limit(g.n(), dense_limit)?;
    let mut m = walk_statistic(g, g.degrees(), g.volume(), params);
    apply_log(&mut m, params.log_mode);
    Ok(m)
}

/// First-order (window 1) walk matrix; shares the windowed code path.
pub fn line_matrix(g: &Graph, params: &FactorizeParams, dense_limit: usize) -> Result<Array2<f64>> {
    let first_order = FactorizeParams { window: 1, ..*params };
    deepwalk_matrix(g, &first_order, dense_limit)
}

/// Windowed walk matrix of a summary graph. Summary volume equals the
/// source volume, so the statistic is on the source scale.
pub fn summary_deepwalk_matrix(s: &SummaryGraph, params: &FactorizeParams) -> Array2<f64> {
    let mut m = walk_statistic(&s.graph, s.graph.degrees(), s.graph.volume(), params);
    apply_log(&mut m, params.log_mode);
    m
}

/// Rank-`dim` embedding `U sqrt(Sigma)` of a dense target matrix.
pub fn factorize(m: &ArrayView2<f64>, dim: usize, seed: u64) -> Result<EmbeddingMatrix> {
    let svd = truncated_svd(m, dim, seed)?;
    let mut e = svd.u;
    for (j, &s) in svd.sigma.iter().enumerate() {
        let root = s.max(0.0).sqrt();
        e.column_mut(j).mapv_inplace(|x| x * root);
    }
    Ok(EmbeddingMatrix { values: e, provenance: Provenance::Direct })
}

/// Expands summary embeddings to full size: `E = R E_s`.
pub fn restore_embeddings(e_s: &EmbeddingMatrix, r: &LinearMap) -> Result<EmbeddingMatrix> {
    r.expect_role(MapRole::Restoration)?;
    if r.supernode_count() != e_s.values.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "map has {} supernodes, embeddings have {} rows",
            r.supernode_count(),
            e_s.values.nrows()
        )));
    }
    Ok(EmbeddingMatrix { values: r.apply(&e_s.values.view())?, provenance: Provenance::Restored })
}

/// Writes a TSV with header `node, dim_0..dim_{d-1}`; values carry 17
/// significant digits so they round-trip bit for bit.
pub fn write_embeddings_tsv<W: Write>(mut w: W, ids: &[u64], values: &ArrayView2<f64>) -> Result<()> {
    if ids.len() != values.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} ids for {} embedding rows",
            ids.len(),
            values.nrows()
        )));
    }
    write!(w, "node")?;
    for j in 0..values.ncols() {
        write!(w, "\tdim_{j}")?;
    }
    writeln!(w)?;
    for (i, &id) in ids.iter().enumerate() {
        write!(w, "{id}")?;
        for j in 0..values.ncols() {
            write!(w, "\t{:.16e}", values[[i, j]])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads the TSV written by [`write_embeddings_tsv`]. Returns node ids in
/// file order plus the value matrix.
pub fn read_embeddings_tsv<R: BufRead>(reader: R) -> Result<(Vec<u64>, Array2<f64>)> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(Error::InvalidArgument("embedding file is empty".into())),
        }
    };
    let cols: Vec<&str> = header.trim().split('\t').collect();
    if cols.first() != Some(&"node") || cols.len() < 2 {
        return Err(Error::Parse { line: 1, msg: "expected header starting with 'node'".into() });
    }
    for (j, c) in cols[1..].iter().enumerate() {
        if *c != format!("dim_{j}") {
            return Err(Error::Parse { line: 1, msg: format!("unexpected header column {c:?}") });
        }
    }
    let dim = cols.len() - 1;

    let mut ids = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    for (k, line) in lines {
        let lineno = k + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != dim + 1 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {} fields, found {}", dim + 1, fields.len()),
            });
        }
        let id: u64 = fields[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad node id {:?}", fields[0]),
        })?;
        ids.push(id);
        for f in &fields[1..] {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad value {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: lineno, msg: format!("non-finite value {v}") });
            }
            rows.push(v);
        }
    }
    if ids.is_empty() {
        return Err(Error::InvalidArgument("embedding file has no rows".into()));
    }
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate node id in embedding file".into()));
    }
    let values = Array2::from_shape_vec((ids.len(), dim), rows)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok((ids, values))
}
