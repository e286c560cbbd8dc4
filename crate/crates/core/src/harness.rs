//! Test instrumentation: seeded random instances, tiny closed-form
//! fixtures, and a link-prediction scorer for embedding quality.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::factor::EmbeddingMatrix;
use crate::graph::Graph;
use crate::summarize::Partition;

/// Distinct stream per retry attempt.
const ATTEMPT_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Largest connected component of an Erdos-Renyi draw `G(n, p)`.
/// Deterministic in the seed; retries with derived seeds (up to 16) when
/// the draw has no component of at least two nodes.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("edge probability must be in (0, 1], got {p}")));
    }
    for attempt in 0..16u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(ATTEMPT_STRIDE)));
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j, 1.0));
                }
            }
        }
        if edges.is_empty() {
            continue;
        }
        // Union-find for the component structure.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(u, v, _) in &edges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru.max(rv)] = ru.min(rv);
            }
        }
        let mut members: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let r = find(&mut parent, i);
            members.entry(r).or_default().push(i);
        }
        // Largest component; ties break toward the smallest root so the
        // choice is deterministic.
        let (_, best) = members
            .into_iter()
            .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
            .unwrap();
        if best.len() < 2 {
            continue;
        }
        let index_of = |node: usize| best.binary_search(&node).unwrap();
        let kept: Vec<(usize, usize, f64)> = edges
            .iter()
            .filter(|&&(u, v, _)| best.binary_search(&u).is_ok() && best.binary_search(&v).is_ok())
            .map(|&(u, v, w)| (index_of(u), index_of(v), w))
            .collect();
        return Graph::from_edges(best.len(), &kept);
    }
    Err(Error::InvalidArgument(format!(
        "no usable component in 16 draws of G({n}, {p}) from seed {seed}"
    )))
}

/// Random surjective partition of `n` nodes onto `k` supernodes: a seeded
/// permutation pins one node per supernode, the rest land uniformly.
pub fn random_partition(n: usize, k: usize, seed: u64) -> Result<Partition> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= {n}, got {k}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut assign = vec![0usize; n];
    for (sup, &node) in perm.iter().take(k).enumerate() {
        assign[node] = sup;
    }
    for &node in perm.iter().skip(k) {
        assign[node] = rng.random_range(0..k);
    }
    Partition::new(assign)
}

/// Holdout-based link-prediction AUC with ties counted half.
///
/// Removes up to `floor(frac * m)` edges whose removal keeps the graph
/// connected (candidates are retried in seeded random order; fewer may be
/// removable), samples as many distinct non-edges, scores pairs by
/// embedding dot product, and returns the probability that a held-out
/// edge outranks a non-edge.
pub fn link_prediction_auc(g: &Graph, e: &EmbeddingMatrix, holdout_frac: f64, seed: u64) -> Result<f64> {
    if !(holdout_frac > 0.0 && holdout_frac <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction must be in (0, 0.5], got {holdout_frac}"
        )));
    }
    if e.values.nrows() != g.n() {
        return Err(Error::ShapeMismatch(format!(
            "{} embedding rows for a graph of {} nodes",
            e.values.nrows(),
            g.n()
        )));
    }
    let n = g.n();
    let all_edges: Vec<(usize, usize)> = g
        .edges_undirected()
        .into_iter()
        .filter(|&(u, v, _)| u != v)
        .map(|(u, v, _)| (u, v))
        .collect();
    let m = all_edges.len();
    let target = (holdout_frac * m as f64).floor() as usize;
    if target == 0 {
        return Err(Error::InvalidArgument(format!(
            "holdout of {holdout_frac} selects no edges out of {m}"
        )));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);

    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(u, v) in &all_edges {
        adj[u].insert(v);
        adj[v].insert(u);
    }
    let connected = |adj: &Vec<BTreeSet<usize>>| -> bool {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    };

    let mut held: Vec<(usize, usize)> = Vec::new();
    for &idx in &order {
        if held.len() == target {
            break;
        }
        let (u, v) = all_edges[idx];
        adj[u].remove(&v);
        adj[v].remove(&u);
        if connected(&adj) {
            held.push((u, v));
        } else {
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    if held.is_empty() {
        return Err(Error::InvalidArgument(
            "no edge can be held out without disconnecting the graph".into(),
        ));
    }

    let edge_set: BTreeSet<(usize, usize)> = all_edges.iter().copied().collect();
    let mut negatives: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut attempts = 0usize;
    let cap = 200 * held.len() + 1000;
    while negatives.len() < held.len() {
        attempts += 1;
        if attempts > cap {
            return Err(Error::InvalidArgument(
                "graph too dense to sample distinct non-edges".into(),
            ));
        }
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let pair = (u.min(v), u.max(v));
        if edge_set.contains(&pair) {
            continue;
        }
        negatives.insert(pair);
    }

    let score = |(u, v): (usize, usize)| e.values.row(u).dot(&e.values.row(v));
    let mut scored: Vec<(f64, bool)> = held.iter().map(|&p| (score(p), true)).collect();
    scored.extend(negatives.iter().map(|&p| (score(p), false)));
    Ok(ranked_auc(&mut scored))
}

/// AUC from (score, is_positive) pairs by average ranks, so tied scores
/// contribute half credit.
fn ranked_auc(scored: &mut [(f64, bool)]) -> f64 {
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = scored.len();
    let positives = scored.iter().filter(|&&(_, pos)| pos).count();
    let negatives = total - positives;
    assert!(positives > 0 && negatives > 0);

    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && scored[j + 1].0 == scored[i].0 {
            j += 1;
        }
        // Ranks are 1-based; everything in [i, j] shares the average.
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for entry in &scored[i..=j] {
            if entry.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let p = positives as f64;
    (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * negatives as f64)
}

/// Tiny graphs with hand-checkable numbers, used all over the test suite.
pub mod fixtures {
    use super::*;

    /// Triangle: all degrees 2, volume 6.
    pub fn k3() -> Graph {
        Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap()
    }

    /// 4-cycle: all degrees 2, volume 8.
    pub fn c4() -> Graph {
        Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap()
    }

    /// The opposite-pair blocks {0,1}, {2,3} of the 4-cycle.
    pub fn c4_pairs() -> Partition {
        Partition::new(vec![0, 0, 1, 1]).unwrap()
    }

    /// Star on four nodes, center 0: degrees [3, 1, 1, 1].
    pub fn star_k13() -> Graph {
        Graph::from_edges(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]).unwrap()
    }

    /// A single edge: degrees [1, 1].
    pub fn single_edge() -> Graph {
        Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::Provenance;
    use crate::svd::gaussian_matrix;
    use ndarray::Array2;

    #[test]
    fn random_graph_is_deterministic_and_connected() {
        let g1 = random_graph(60, 0.08, 5).unwrap();
        let g2 = random_graph(60, 0.08, 5).unwrap();
        assert_eq!(g1.to_dense(), g2.to_dense());
        assert!(g1.n() >= 2);
        // Connectivity: one BFS reaches everything.
        let mut seen = vec![false; g1.n()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for (v, _) in g1.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
        let g3 = random_graph(60, 0.08, 6).unwrap();
        assert_ne!(g1.to_dense(), g3.to_dense(), "different seeds, different draws");
    }

    #[test]
    fn complete_draw_keeps_every_node() {
        let g = random_graph(2, 1.0, 0).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.degrees().as_slice(), &[1.0, 1.0]);
        let g = random_graph(10, 1.0, 0).unwrap();
        assert_eq!(g.n(), 10);
        assert_eq!(g.edge_count(), 45);
    }

    #[test]
    fn random_partition_is_surjective_and_deterministic() {
        let p1 = random_partition(30, 7, 3).unwrap();
        let p2 = random_partition(30, 7, 3).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(p1.supernode_count(), 7);
        assert!(p1.block_sizes().iter().all(|&s| s > 0));
        assert!(random_partition(5, 6, 0).is_err());
        assert!(random_partition(5, 0, 0).is_err());
    }

    #[test]
    fn auc_is_half_for_zero_embeddings_and_high_for_planted_structure() {
        let g = random_graph(80, 0.1, 11).unwrap();
        let zero = EmbeddingMatrix {
            values: Array2::zeros((g.n(), 8)),
            provenance: Provenance::Direct,
        };
        let auc = link_prediction_auc(&g, &zero, 0.2, 1).unwrap();
        assert_eq!(auc, 0.5);

        // Walk-matrix embeddings of the graph itself should separate
        // held-out edges from non-edges well above chance.
        let params = crate::factor::FactorizeParams::default();
        let m = crate::factor::deepwalk_matrix(&g, &params, 2000).unwrap();
        let e = crate::factor::factorize(&m.view(), 16, 0).unwrap();
        let auc = link_prediction_auc(&g, &e, 0.2, 1).unwrap();
        assert!((0.5..=1.0).contains(&auc));
        assert!(auc > 0.6, "informative embeddings scored {auc}");
    }

    #[test]
    fn auc_rejects_bad_arguments() {
        let g = fixtures::c4();
        let e = EmbeddingMatrix { values: Array2::zeros((4, 2)), provenance: Provenance::Direct };
        assert!(link_prediction_auc(&g, &e, 0.0, 0).is_err());
        assert!(link_prediction_auc(&g, &e, 0.6, 0).is_err());
        let wrong = EmbeddingMatrix { values: Array2::zeros((3, 2)), provenance: Provenance::Direct };
        assert!(link_prediction_auc(&g, &wrong, 0.2, 0).is_err());
        // A tree has no removable edge.
        let tree = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let e = EmbeddingMatrix { values: Array2::zeros((4, 2)), provenance: Provenance::Direct };
        assert!(link_prediction_auc(&tree, &e, 0.4, 0).is_err());
    }

    #[test]
    fn ranked_auc_gives_half_credit_to_ties() {
        // Perfect separation.
        let mut s = vec![(0.9, true), (0.8, true), (0.2, false), (0.1, false)];
        assert_eq!(ranked_auc(&mut s), 1.0);
        // Complete reversal.
        let mut s = vec![(0.1, true), (0.2, true), (0.8, false), (0.9, false)];
        assert_eq!(ranked_auc(&mut s), 0.0);
        // One tie across classes contributes 0.5 of its pair.
        let mut s = vec![(0.9, true), (0.5, true), (0.5, false), (0.1, false)];
        assert_eq!(ranked_auc(&mut s), 0.875);
    }

    #[test]
    fn gaussian_matrix_is_seed_deterministic() {
        let a = gaussian_matrix(4, 3, 1.0, 9);
        let b = gaussian_matrix(4, 3, 1.0, 9);
        assert_eq!(a, b);
        let c = gaussian_matrix(4, 3, 1.0, 10);
        assert_ne!(a, c);
    }
}
