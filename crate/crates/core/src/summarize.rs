//! Graph summarization: collapse a partition of the nodes into supernodes,
//! and reconstruct a full-size approximation from the summary.
//!
//! The summary adjacency is `A_s = P A P^T` for the 0/1 membership map P:
//! superedge weights add up all crossing edge weights, and a supernode's
//! self-loop holds all intra-block mass. Supernode degrees are therefore
//! exactly the summed member degrees and total volume is preserved. The
//! reconstruction `A_r = Q A_s Q^T` spreads each superedge back over the
//! member pairs proportionally to degree (a configuration-model fill-in);
//! its row sums reproduce the original degrees identically and its rank is
//! at most the number of supernodes.

use std::io::{BufRead, Write};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linmap::{LinearMap, MapRole};

/// Surjective assignment of `n` nodes onto supernodes `0..n_s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assign: Vec<usize>,
    n_s: usize,
}

impl Partition {
    /// Builds a partition from per-node supernode ids. Ids must cover
    /// `0..=max` with no gaps.
    pub fn new(assign: Vec<usize>) -> Result<Self> {
        if assign.is_empty() {
            return Err(Error::InvalidArgument("partition of zero nodes".into()));
        }
        let n_s = assign.iter().max().unwrap() + 1;
        let mut seen = vec![false; n_s];
        for &p in &assign {
            seen[p] = true;
        }
        if let Some(gap) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "supernode ids have a gap at {gap}"
            )));
        }
        Ok(Partition { assign, n_s })
    }

    /// Every node in its own supernode.
    pub fn singleton(n: usize) -> Self {
        Partition { assign: (0..n).collect(), n_s: n }
    }

    /// All nodes in one supernode.
    pub fn all_in_one(n: usize) -> Self {
        assert!(n > 0, "partition of zero nodes");
        Partition { assign: vec![0; n], n_s: 1 }
    }

    pub fn n(&self) -> usize {
        self.assign.len()
    }

    pub fn supernode_count(&self) -> usize {
        self.n_s
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    pub fn of(&self, node: usize) -> usize {
        self.assign[node]
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n_s];
        for &p in &self.assign {
            sizes[p] += 1;
        }
        sizes
    }

    /// Members of each supernode, ascending.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.n_s];
        for (i, &p) in self.assign.iter().enumerate() {
            blocks[p].push(i);
        }
        blocks
    }
}

/// Summary graph: the collapsed graph plus the size of the source.
/// Supernode degrees are its ordinary degree vector, which coincides with
/// the per-block sums of source degrees.
#[derive(Debug, Clone)]
pub struct SummaryGraph {
    pub graph: Graph,
    pub source_n: usize,
}

impl SummaryGraph {
    pub fn n_s(&self) -> usize {
        self.graph.n()
    }
}

/// The 0/1 membership map P (`n_s x n`).
pub fn membership_matrix(p: &Partition) -> LinearMap {
    LinearMap::new(
        MapRole::Membership,
        p.n_s,
        p.assign.clone(),
        vec![1.0; p.assign.len()],
    )
}

/// Per-supernode degree mass `d_p = sum of member degrees`.
pub fn block_degrees(g: &Graph, p: &Partition) -> Vec<f64> {
    let mut d_s = vec![0.0f64; p.supernode_count()];
    for (i, &pi) in p.assign().iter().enumerate() {
        d_s[pi] += g.degrees().get(i);
    }
    d_s
}

/// Collapses `g` along partition `p` into its summary graph.
pub fn summarize(g: &Graph, p: &Partition) -> Result<SummaryGraph> {
    if p.n() != g.n() {
        return Err(Error::ShapeMismatch(format!(
            "partition covers {} nodes, graph has {}",
            p.n(),
            g.n()
        )));
    }
    // Off-diagonal crossing weights add once per undirected edge; an
    // intra-block edge contributes both its orientations to the block's
    // self-loop, so its weight doubles there. Existing self-loops keep
    // their single diagonal entry.
    let mut acc: std::collections::BTreeMap<(usize, usize), f64> = std::collections::BTreeMap::new();
    for (u, v, w) in g.edges_undirected() {
        let (pu, pv) = (p.of(u), p.of(v));
        if pu == pv {
            let mass = if u == v { w } else { 2.0 * w };
            *acc.entry((pu, pu)).or_insert(0.0) += mass;
        } else {
            let key = (pu.min(pv), pu.max(pv));
            *acc.entry(key).or_insert(0.0) += w;
        }
    }
    let edges: Vec<(usize, usize, f64)> = acc.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    let graph = Graph::from_edges(p.supernode_count(), &edges)?;
    Ok(SummaryGraph { graph, source_n: g.n() })
}

/// Degree-proportional reconstruction map Q (`n x n_s`),
/// `Q(i, p) = d_i / d_p` for member nodes.
pub fn reconstruction_matrix(g: &Graph, p: &Partition) -> Result<LinearMap> {
    if p.n() != g.n() {
        return Err(Error::ShapeMismatch(format!(
            "partition covers {} nodes, graph has {}",
            p.n(),
            g.n()
        )));
    }
    let d_s = block_degrees(g, p);
    let values: Vec<f64> = p
        .assign()
        .iter()
        .enumerate()
        .map(|(i, &pi)| g.degrees().get(i) / d_s[pi])
        .collect();
    Ok(LinearMap::new(MapRole::Reconstruction, p.supernode_count(), p.assign().to_vec(), values))
}

/// Dense reconstructed adjacency `A_r = Q A_s Q^T`.
pub fn reconstruct(s: &SummaryGraph, q: &LinearMap) -> Result<Array2<f64>> {
    q.expect_role(MapRole::Reconstruction)?;
    if q.supernode_count() != s.n_s() {
        return Err(Error::ShapeMismatch(format!(
            "map has {} supernodes, summary has {}",
            q.supernode_count(),
            s.n_s()
        )));
    }
    let a_s = s.graph.to_dense();
    q.sandwich(&a_s.view())
}

/// Coarsens by repeated heavy-edge matching until at most `target_nodes`
/// supernodes remain. Each round draws a seeded permutation to break
/// weight ties, matches greedily by descending weight, and collapses the
/// matched pairs. Returns early (above target) if no merge is possible,
/// which happens when the target is below the number of connected
/// components.
pub fn heavy_edge_matching(g: &Graph, target_nodes: usize, seed: u64) -> Result<Partition> {
    if target_nodes == 0 || target_nodes > g.n() {
        return Err(Error::InvalidArgument(format!(
            "target_nodes must be in 1..={}, got {target_nodes}",
            g.n()
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut assign: Vec<usize> = (0..g.n()).collect();
    let mut cur = g.clone();

    while cur.n() > target_nodes {
        let mut edges: Vec<(usize, usize, f64)> = cur
            .edges_undirected()
            .into_iter()
            .filter(|&(u, v, _)| u != v)
            .collect();
        if edges.is_empty() {
            break;
        }
        let mut perm: Vec<usize> = (0..cur.n()).collect();
        perm.shuffle(&mut rng);
        edges.sort_by(|a, b| {
            b.2.total_cmp(&a.2).then_with(|| {
                let ka = (perm[a.0].min(perm[a.1]), perm[a.0].max(perm[a.1]));
                let kb = (perm[b.0].min(perm[b.1]), perm[b.0].max(perm[b.1]));
                ka.cmp(&kb)
            })
        });

        let mut matched = vec![false; cur.n()];
        let mut partner: Vec<Option<usize>> = vec![None; cur.n()];
        let mut remaining = cur.n();
        for (u, v, _) in edges {
            if remaining <= target_nodes {
                break;
            }
            if !matched[u] && !matched[v] {
                matched[u] = true;
                matched[v] = true;
                partner[u.max(v)] = Some(u.min(v));
                remaining -= 1;
            }
        }
        if remaining == cur.n() {
            break;
        }

        let mut new_id = vec![usize::MAX; cur.n()];
        let mut next = 0usize;
        for i in 0..cur.n() {
            match partner[i] {
                Some(keep) => new_id[i] = new_id[keep],
                None => {
                    new_id[i] = next;
                    next += 1;
                }
            }
        }
        let round = Partition::new(new_id.clone())?;
        cur = summarize(&cur, &round)?.graph;
        for a in assign.iter_mut() {
            *a = new_id[*a];
        }
    }

    Partition::new(assign)
}

/// Writes `node <TAB> supernode` lines, nodes labeled by `ids`.
pub fn write_partition<W: Write>(mut w: W, p: &Partition, ids: &[u64]) -> Result<()> {
    if ids.len() != p.n() {
        return Err(Error::ShapeMismatch(format!(
            "{} ids for a partition of {} nodes",
            ids.len(),
            p.n()
        )));
    }
    for (i, &pi) in p.assign().iter().enumerate() {
        writeln!(w, "{}\t{}", ids[i], pi)?;
    }
    Ok(())
}

/// Reads a `node <TAB> supernode` file. Every id in `ids` must appear
/// exactly once; supernode ids must satisfy the partition invariants.
pub fn read_partition<R: BufRead>(reader: R, ids: &[u64]) -> Result<Partition> {
    let mut assign: Vec<Option<usize>> = vec![None; ids.len()];
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let node: u64 = fields[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad node id {:?}", fields[0]),
        })?;
        let sup: usize = fields[1].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad supernode id {:?}", fields[1]),
        })?;
        let dense = ids.binary_search(&node).map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("node {node} is not in the graph"),
        })?;
        if assign[dense].is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("node {node} assigned twice"),
            });
        }
        assign[dense] = Some(sup);
    }
    let mut out = Vec::with_capacity(ids.len());
    for (dense, a) in assign.into_iter().enumerate() {
        match a {
            Some(p) => out.push(p),
            None => {
                return Err(Error::InvalidArgument(format!(
                    "node {} has no partition assignment",
                    ids[dense]
                )))
            }
        }
    }
    Partition::new(out)
}
