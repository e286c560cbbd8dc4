//! Acceptance battery. One test per criterion, each printing a single
//! summary line; run with `--nocapture --test-threads=1` to see them in
//! order. Criterion 9 reports a downstream comparison without gating.

use ndarray::Array2;
use std::time::Instant;

use sumbed::factor::{
    deepwalk_matrix, factorize, restore_embeddings, summary_deepwalk_matrix, walk_statistic,
    FactorizeParams, LogMode,
};
use sumbed::gcn::{gcn_forward_layers, gcn_restoration_bound, GcnModel};
use sumbed::graph::{frobenius_norm, kahan_sum, max_abs, Graph};
use sumbed::harness::{fixtures, link_prediction_auc, random_graph, random_partition};
use sumbed::kernel::{
    kernel_error_bound, kernel_restoration_error, reconstruction_gram_error, restoration_matrix,
    scaling_identity_error, KernelParams, REL_ERR_FLOOR,
};
use sumbed::summarize::{heavy_edge_matching, reconstruct, reconstruction_matrix, summarize, Partition};
use sumbed::svd::{dense_svd, gaussian_matrix, randomized_svd};
use sumbed::verify::{run_verify_suite, VerifyConfig};
use sumbed::EmbeddingMatrix;

const DENSE_LIMIT: usize = 2000;
const C_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const TAU_GRID: [u32; 3] = [1, 2, 5];

/// The shared instance set: 50 seeded (graph, partition) pairs at n=200,
/// p=0.05, with the supernode budget cycling through {10, 50, 150}.
fn instance_pairs() -> Vec<(Graph, Partition)> {
    let budgets = [10usize, 50, 150];
    (0..50u64)
        .map(|i| {
            let g = random_graph(200, 0.05, 1000 + i).expect("instance graph");
            let k = budgets[i as usize % 3].min(g.n());
            let p = random_partition(g.n(), k, 2000 + i).expect("instance partition");
            (g, p)
        })
        .collect()
}

#[test]
fn criterion_1_kernel_restoration_identity() {
    let t0 = Instant::now();
    let pairs = instance_pairs();
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for (g, p) in &pairs {
        for &c in &C_GRID {
            for &tau in &TAU_GRID {
                let params = KernelParams::new(c, tau).unwrap();
                let rel = kernel_restoration_error(g, p, params, DENSE_LIMIT).unwrap();
                assert!(
                    rel <= 1e-10,
                    "kernel restoration error {rel:e} at c={c}, tau={tau}"
                );
                worst = worst.max(rel);
                count += 1;
            }
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 30.0, "criterion 1 took {dt:.1} s");
    println!(
        "ACCEPTANCE 1 (kernel restoration identity): PASS — {count} checks, worst rel err {worst:.2e}, {dt:.1} s"
    );
}

#[test]
fn criterion_2_map_identities() {
    let pairs = instance_pairs();
    let mut worst_gram = 0.0f64;
    let mut worst_scaling = 0.0f64;
    for (g, p) in &pairs {
        let gram = reconstruction_gram_error(g, p).unwrap();
        assert!(gram <= 1e-12, "gram identity error {gram:e}");
        worst_gram = worst_gram.max(gram);
        for &c in &[0.0, 0.5, 1.0] {
            let s = scaling_identity_error(g, p, c).unwrap();
            assert!(s <= 1e-12, "scaling identity error {s:e} at c={c}");
            worst_scaling = worst_scaling.max(s);
        }
    }
    println!(
        "ACCEPTANCE 2 (map identities): PASS — worst gram {worst_gram:.2e}, worst scaling {worst_scaling:.2e}"
    );
}

#[test]
fn criterion_3_degree_preservation() {
    let pairs = instance_pairs();
    let mut worst = 0.0f64;
    for (g, p) in &pairs {
        let s = summarize(g, p).unwrap();
        let q = reconstruction_matrix(g, p).unwrap();
        let a_r = reconstruct(&s, &q).unwrap();
        for i in 0..g.n() {
            let row = kahan_sum(a_r.row(i).iter().copied());
            let gap = (row - g.degrees().get(i)).abs();
            assert!(gap <= 1e-12, "row sum gap {gap:e} at node {i}");
            worst = worst.max(gap);
        }
    }
    println!("ACCEPTANCE 3 (degree preservation): PASS — worst row-sum gap {worst:.2e}");
}

#[test]
fn criterion_4_kernel_error_bound() {
    let t0 = Instant::now();
    let pairs = instance_pairs();
    let mut count = 0usize;
    let mut tightest = f64::INFINITY;
    for (g, p) in &pairs {
        for &c in &C_GRID {
            for &tau in &TAU_GRID {
                let params = KernelParams::new(c, tau).unwrap();
                let rep = kernel_error_bound(g, p, params, DENSE_LIMIT).unwrap();
                assert!(
                    rep.actual_error <= rep.bound * (1.0 + 1e-9),
                    "bound violated at c={c}, tau={tau}: actual {:e} > bound {:e}",
                    rep.actual_error,
                    rep.bound
                );
                if rep.bound > 0.0 {
                    tightest = tightest.min(rep.bound / rep.actual_error.max(REL_ERR_FLOOR));
                }
                count += 1;
            }
        }
    }

    // Paired 4-cycle: the bound is met with equality, while the
    // alternative published prefactor undershoots the measured error.
    let rep = kernel_error_bound(
        &fixtures::c4(),
        &fixtures::c4_pairs(),
        KernelParams::new(1.0, 1).unwrap(),
        DENSE_LIMIT,
    )
    .unwrap();
    assert!((rep.actual_error - 0.5).abs() <= 1e-12, "fixture actual {}", rep.actual_error);
    assert!((rep.bound - 0.5).abs() <= 1e-12, "fixture bound {}", rep.bound);
    let published = rep.published_bound.expect("published variant");
    assert!((published - 0.125).abs() <= 1e-12, "published bound {published}");
    assert!(published < rep.actual_error, "published variant should undershoot here");

    let dt = t0.elapsed().as_secs_f64();
    println!(
        "ACCEPTANCE 4 (kernel error bound): PASS — {count} checks hold, min bound/actual {tightest:.2}; paired-cycle fixture: actual 0.5 = bound, published variant 0.125 undershoots (documented discrepancy), {dt:.1} s"
    );
}

#[test]
fn criterion_5_walk_statistic_restoration() {
    let pairs = instance_pairs();
    let mut worst = 0.0f64;
    for (g, p) in &pairs {
        let s = summarize(g, p).unwrap();
        let q = reconstruction_matrix(g, p).unwrap();
        let a_r = reconstruct(&s, &q).unwrap();
        let r = restoration_matrix(g, p, 1.0).unwrap();
        for &t in &[1u32, 5] {
            let params = FactorizeParams::new(t, 1.0, LogMode::Truncated).unwrap();
            let on_rec = walk_statistic(&a_r, g.degrees(), g.volume(), &params);
            let on_sum = walk_statistic(&s.graph, s.graph.degrees(), s.graph.volume(), &params);
            let restored = r.sandwich(&on_sum.view()).unwrap();
            let rel = frobenius_norm(&(&on_rec - &restored).view())
                / frobenius_norm(&on_rec.view()).max(REL_ERR_FLOOR);
            assert!(rel <= 1e-10, "walk statistic error {rel:e} at T={t}");
            worst = worst.max(rel);
        }
    }

    // Singleton partitions change nothing: the restored matrix must be
    // the direct one bit for bit, log step included.
    let params = FactorizeParams::default();
    let mut singleton_checked = 0usize;
    let fixture_graphs = [fixtures::k3(), fixtures::c4(), fixtures::star_k13(), fixtures::single_edge()];
    let sample = pairs.iter().take(10).map(|(g, _)| g).chain(fixture_graphs.iter());
    for g in sample {
        let p1 = Partition::singleton(g.n());
        let direct = deepwalk_matrix(g, &params, DENSE_LIMIT).unwrap();
        let via = summary_deepwalk_matrix(&summarize(g, &p1).unwrap(), &params);
        let r1 = restoration_matrix(g, &p1, 1.0).unwrap();
        let restored = r1.sandwich(&via.view()).unwrap();
        let gap = max_abs(&(&direct - &restored).view());
        assert_eq!(gap, 0.0, "singleton restoration must be exact");
        singleton_checked += 1;
    }
    println!(
        "ACCEPTANCE 5 (walk statistic restoration): PASS — worst pre-log rel err {worst:.2e}; {singleton_checked} singleton cases exact"
    );
}

#[test]
fn criterion_6_gcn_bound_and_maps() {
    let dim = 16usize;
    let mut worst_gram = 0.0f64;
    let mut worst_layer = f64::NEG_INFINITY;
    let mut count = 0usize;
    for s in 0..20u64 {
        let g = random_graph(200, 0.05, 3000 + s).unwrap();
        let p = random_partition(g.n(), 50.min(g.n()), 4000 + s).unwrap();
        let x = EmbeddingMatrix {
            values: gaussian_matrix(g.n(), dim, 1.0, 5000 + s),
            provenance: sumbed::Provenance::Direct,
        };

        let ag = g.augment().unwrap();
        let r = restoration_matrix(&ag, &p, 0.5).unwrap();
        let gram_gap = max_abs(
            &(&r.gram() - &Array2::<f64>::eye(p.supernode_count())).view(),
        );
        assert!(gram_gap <= 1e-12, "restoration gram gap {gram_gap:e}");
        worst_gram = worst_gram.max(gram_gap);

        for depth in 1..=3usize {
            let dims: Vec<usize> = vec![dim; depth + 1];
            let model = GcnModel::seeded(&dims, 6000 + s * 8 + depth as u64).unwrap();
            let rep = gcn_restoration_bound(&g, &p, &model, &x, DENSE_LIMIT).unwrap();
            assert!(
                rep.actual_error <= rep.bound * (1.0 + 1e-9),
                "propagation bound violated at seed {s}, depth {depth}: actual {:e} > bound {:e}",
                rep.actual_error,
                rep.bound
            );
            count += 1;

            let states = gcn_forward_layers(&g, &x, &model).unwrap();
            let norms: Vec<f64> = states.iter().map(|m| frobenius_norm(&m.view())).collect();
            let wnorms = model.weight_norms();
            for l in 1..norms.len() {
                let slack = norms[l] - norms[l - 1] * wnorms[l - 1];
                assert!(slack <= 1e-9, "layer norm inequality violated: slack {slack:e}");
                worst_layer = worst_layer.max(slack);
            }
        }
    }
    println!(
        "ACCEPTANCE 6 (propagation bound and maps): PASS — {count} bound checks, worst gram gap {worst_gram:.2e}, worst layer-norm slack {worst_layer:.2e}"
    );
}

#[test]
fn criterion_7_randomized_svd_quality() {
    let rank = 32usize;
    let mut worst_ratio = 0.0f64;
    for s in 0..3u64 {
        let m = gaussian_matrix(200, 200, 1.0, 7000 + s);
        let approx = randomized_svd(&m.view(), rank, 100 + s).unwrap();
        let mut rec = approx.u.clone();
        for (j, &sv) in approx.sigma.iter().enumerate() {
            rec.column_mut(j).mapv_inplace(|x| x * sv);
        }
        let rec = rec.dot(&approx.v.t());
        let err = frobenius_norm(&(&m - &rec).view());

        let full = dense_svd(&m.view());
        let opt: f64 = full.sigma[rank..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let ratio = err / opt;
        assert!(ratio <= 1.10, "randomized SVD ratio {ratio:.4} at seed {s}");
        worst_ratio = worst_ratio.max(ratio);
    }
    println!(
        "ACCEPTANCE 7 (randomized SVD quality): PASS — worst error ratio {worst_ratio:.4} vs dense-oracle optimum"
    );
}

#[test]
fn criterion_8_verify_suite_desk_run() {
    let cfg = VerifyConfig { n: 1000, edge_prob: 0.01, n_s: 250, dim: 32, ..VerifyConfig::default() };
    let t0 = Instant::now();
    let report = run_verify_suite(&cfg).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let failed = report.failed();
    assert!(
        report.pass,
        "verify suite failed {} of {} checks; first: {:?}",
        failed.len(),
        report.checks.len(),
        failed.first()
    );
    assert!(dt < 60.0, "verify suite took {dt:.1} s");
    println!(
        "ACCEPTANCE 8 (verify suite desk run): PASS — {} checks green in {dt:.1} s (n=1000, p=0.01, n_s=250, d=32)",
        report.checks.len()
    );
}

#[test]
fn criterion_9_downstream_link_prediction() {
    let params = FactorizeParams::default();
    let dim = 32usize;
    let mut direct_sum = 0.0f64;
    let mut restored_sum = 0.0f64;
    let seeds = 5u64;
    for s in 0..seeds {
        let g = random_graph(1000, 0.01, 8000 + s).unwrap();
        let p = heavy_edge_matching(&g, g.n() / 2, 8100 + s).unwrap();

        let m = deepwalk_matrix(&g, &params, DENSE_LIMIT).unwrap();
        let e_direct = factorize(&m.view(), dim, 8200 + s).unwrap();
        let auc_direct = link_prediction_auc(&g, &e_direct, 0.1, 8300 + s).unwrap();

        let s_g = summarize(&g, &p).unwrap();
        let m_s = summary_deepwalk_matrix(&s_g, &params);
        let e_s = factorize(&m_s.view(), dim, 8200 + s).unwrap();
        let r = restoration_matrix(&g, &p, 1.0).unwrap();
        let e_restored = restore_embeddings(&e_s, &r).unwrap();
        let auc_restored = link_prediction_auc(&g, &e_restored, 0.1, 8300 + s).unwrap();

        assert!((0.0..=1.0).contains(&auc_direct));
        assert!((0.0..=1.0).contains(&auc_restored));
        direct_sum += auc_direct;
        restored_sum += auc_restored;
    }
    let direct = direct_sum / seeds as f64;
    let restored = restored_sum / seeds as f64;
    let delta = (direct - restored).abs();
    println!(
        "ACCEPTANCE 9 (downstream link prediction): REPORTED — direct AUC {direct:.4}, restored AUC {restored:.4}, |delta| {delta:.4} ({}; non-gating)",
        if delta <= 0.10 { "within 0.10" } else { "outside 0.10" }
    );
}
