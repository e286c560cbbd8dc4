//! Property tests for the structural invariants: what must hold on every
//! valid input, not just the worked fixtures.

use ndarray::Array2;
use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

use sumbed::factor::{
    deepwalk_matrix, line_matrix, restore_embeddings, summary_deepwalk_matrix, walk_statistic,
    EmbeddingMatrix, FactorizeParams, LogMode, Provenance,
};
use sumbed::graph::{kahan_sum, max_abs, Graph};
use sumbed::harness::{link_prediction_auc, random_partition};
use sumbed::kernel::{
    kernel_of_graph, kernel_restoration_error, reconstruction_gram_error, restoration_matrix,
    scaling_identity_error, KernelParams,
};
use sumbed::summarize::{
    block_degrees, heavy_edge_matching, membership_matrix, read_partition, reconstruct,
    reconstruction_matrix, summarize, write_partition, Partition,
};
use sumbed::svd::gaussian_matrix;

/// Connected weighted graph derived from (n, extra, seed): a random
/// attachment tree plus `extra` extra edges, weights in [0.25, 4.0].
fn seeded_graph(n: usize, extra: usize, seed: u64) -> Graph {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(&mut rng);
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        edges.push((label[i], label[j], rng.random_range(0.25..4.0)));
    }
    for _ in 0..extra {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.push((u, v, rng.random_range(0.25..4.0)));
        }
    }
    Graph::from_edges(n, &edges).expect("tree edges cover every node")
}

fn arb_instance() -> impl Strategy<Value = (Graph, Partition)> {
    (2usize..20, 0usize..24, any::<u64>(), 1usize..20).prop_map(|(n, extra, seed, k_raw)| {
        let g = seeded_graph(n, extra, seed);
        let k = 1 + k_raw % g.n();
        let p = random_partition(g.n(), k, seed.wrapping_add(1)).unwrap();
        (g, p)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn summarization_preserves_degrees_and_volume((g, p) in arb_instance()) {
        let s = summarize(&g, &p).unwrap();
        let blocks = block_degrees(&g, &p);
        for (q, &b) in blocks.iter().enumerate() {
            prop_assert!((s.graph.degrees().get(q) - b).abs() <= 1e-12);
        }
        prop_assert!((s.graph.volume() - g.volume()).abs() <= 1e-12);
    }

    #[test]
    fn reconstruction_row_sums_reproduce_degrees((g, p) in arb_instance()) {
        let s = summarize(&g, &p).unwrap();
        let q = reconstruction_matrix(&g, &p).unwrap();
        let a_r = reconstruct(&s, &q).unwrap();
        for i in 0..g.n() {
            let row = kahan_sum(a_r.row(i).iter().copied());
            prop_assert!((row - g.degrees().get(i)).abs() <= 1e-12);
        }
    }

    #[test]
    fn map_identities_hold((g, p) in arb_instance(), c in 0.0f64..=1.0) {
        prop_assert!(reconstruction_gram_error(&g, &p).unwrap() <= 1e-12);
        prop_assert!(scaling_identity_error(&g, &p, c).unwrap() <= 1e-12);
    }

    #[test]
    fn membership_has_one_entry_per_node((g, p) in arb_instance()) {
        let m = membership_matrix(&p).to_dense();
        for i in 0..g.n() {
            let col: Vec<f64> = m.column(i).iter().copied().collect();
            prop_assert_eq!(col.iter().filter(|&&v| v == 1.0).count(), 1);
            prop_assert_eq!(col.iter().filter(|&&v| v != 0.0).count(), 1);
        }
    }

    #[test]
    fn kernel_restoration_identity_holds(
        (g, p) in arb_instance(),
        c in 0.0f64..=1.0,
        tau in 1u32..=4,
    ) {
        let rel = kernel_restoration_error(&g, &p, KernelParams::new(c, tau).unwrap(), 2000).unwrap();
        prop_assert!(rel <= 1e-10, "relative error {rel:e}");
    }

    #[test]
    fn symmetric_kernel_matches_normalized_adjacency((g, _) in arb_instance()) {
        let k = kernel_of_graph(&g, KernelParams::new(0.5, 1).unwrap());
        let gap = max_abs(&(&k.values - &g.normalized_adjacency()).view());
        prop_assert!(gap <= 1e-14);
    }

    #[test]
    fn singleton_walk_restoration_is_bitwise_exact((g, _) in arb_instance(), window in 1u32..=3) {
        let p1 = Partition::singleton(g.n());
        let params = FactorizeParams::new(window, 1.0, LogMode::Truncated).unwrap();
        let direct = deepwalk_matrix(&g, &params, 2000).unwrap();
        let via = summary_deepwalk_matrix(&summarize(&g, &p1).unwrap(), &params);
        let r1 = restoration_matrix(&g, &p1, 1.0).unwrap();
        let restored = r1.sandwich(&via.view()).unwrap();
        prop_assert_eq!(direct, restored);
    }

    #[test]
    fn first_order_matrix_is_window_one((g, _) in arb_instance(), window in 2u32..=6) {
        let params = FactorizeParams::new(window, 0.7, LogMode::Truncated).unwrap();
        let one = FactorizeParams::new(1, 0.7, LogMode::Truncated).unwrap();
        prop_assert_eq!(
            line_matrix(&g, &params, 2000).unwrap(),
            deepwalk_matrix(&g, &one, 2000).unwrap()
        );
    }

    #[test]
    fn indicator_restoration_repeats_rows((g, p) in arb_instance(), d in 1usize..5) {
        let e_s = EmbeddingMatrix {
            values: gaussian_matrix(p.supernode_count(), d, 1.0, 7),
            provenance: Provenance::Summary,
        };
        let r1 = restoration_matrix(&g, &p, 1.0).unwrap();
        let e = restore_embeddings(&e_s, &r1).unwrap();
        for i in 0..g.n() {
            let q = p.assign()[i];
            prop_assert_eq!(e.values.row(i).to_owned(), e_s.values.row(q).to_owned());
        }
    }

    #[test]
    fn walk_statistic_is_symmetric_on_symmetric_input((g, _) in arb_instance(), window in 1u32..=3) {
        let params = FactorizeParams::new(window, 1.0, LogMode::Truncated).unwrap();
        let s = walk_statistic(&g, g.degrees(), g.volume(), &params);
        let gap = max_abs(&(&s - &s.t()).view());
        prop_assert!(gap <= 1e-12 * (1.0 + max_abs(&s.view())));
    }

    #[test]
    fn matching_reaches_connected_target(n in 2usize..24, extra in 0usize..16, seed in any::<u64>(), frac in 0.1f64..1.0) {
        let g = seeded_graph(n, extra, seed);
        let target = ((g.n() as f64 * frac) as usize).max(1);
        let p = heavy_edge_matching(&g, target, seed).unwrap();
        prop_assert!(p.supernode_count() <= target.max(1));
        prop_assert!(p.supernode_count() >= 1);
        let again = heavy_edge_matching(&g, target, seed).unwrap();
        prop_assert_eq!(p.assign(), again.assign());
    }

    #[test]
    fn auc_stays_in_range(n in 10usize..30, seed in any::<u64>(), d in 1usize..6) {
        let g = seeded_graph(n, n, seed);
        let e = EmbeddingMatrix {
            values: gaussian_matrix(g.n(), d, 1.0, seed.wrapping_add(2)),
            provenance: Provenance::Direct,
        };
        let auc = link_prediction_auc(&g, &e, 0.2, seed.wrapping_add(3)).unwrap();
        prop_assert!((0.0..=1.0).contains(&auc));
    }

    #[test]
    fn partition_io_round_trips(assign_raw in proptest::collection::vec(0usize..6, 1..40), id_steps in proptest::collection::vec(1u64..1000, 40)) {
        // Compact the raw labels into a gap-free partition.
        let mut seen: Vec<usize> = Vec::new();
        let assign: Vec<usize> = assign_raw.iter().map(|&a| {
            match seen.iter().position(|&s| s == a) {
                Some(idx) => idx,
                None => { seen.push(a); seen.len() - 1 }
            }
        }).collect();
        let n = assign.len();
        let p = Partition::new(assign).unwrap();
        let mut ids: Vec<u64> = Vec::with_capacity(n);
        let mut acc = 0u64;
        for step in id_steps.iter().take(n) {
            acc += step;
            ids.push(acc);
        }
        let mut buf = Vec::new();
        write_partition(&mut buf, &p, &ids).unwrap();
        let back = read_partition(std::io::Cursor::new(buf), &ids).unwrap();
        prop_assert_eq!(p.assign(), back.assign());
    }

    #[test]
    fn restored_gram_matches_summary_gram_at_half(
        (g, p) in arb_instance(),
        d in 1usize..4,
    ) {
        // Orthonormal restoration preserves Gram structure: the restored
        // embedding Gram R E_s (R E_s)^T has the same nonzero spectrum as
        // E_s E_s^T, so squared norms agree.
        let e_s = EmbeddingMatrix {
            values: gaussian_matrix(p.supernode_count(), d, 1.0, 11),
            provenance: Provenance::Summary,
        };
        let r = restoration_matrix(&g.augment().unwrap(), &p, 0.5).unwrap();
        let e = restore_embeddings(&e_s, &r).unwrap();
        let restored_sq: f64 = e.values.iter().map(|v| v * v).sum();
        let summary_sq: f64 = e_s.values.iter().map(|v| v * v).sum();
        prop_assert!((restored_sq - summary_sq).abs() <= 1e-10 * (1.0 + summary_sq));
    }
}

#[test]
fn zero_embeddings_score_exactly_half() {
    let g = seeded_graph(20, 20, 5);
    let e = EmbeddingMatrix {
        values: Array2::zeros((g.n(), 4)),
        provenance: Provenance::Direct,
    };
    let auc = link_prediction_auc(&g, &e, 0.25, 3).unwrap();
    assert_eq!(auc, 0.5);
}
