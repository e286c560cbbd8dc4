//! Command-line front end: summarize, embed, restore, verify, eval.
//!
//! Edge lists, partition files, and embedding TSVs all speak the node ids
//! the input files use; summary embeddings use supernode ids 0..n_s-1.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{ArgGroup, Parser, Subcommand};
use ndarray::Array2;

use sumbed::factor::{read_embeddings_tsv, write_embeddings_tsv};
use sumbed::gcn::GcnModelSpec;
use sumbed::graph::LoadedGraph;
use sumbed::summarize::{read_partition, write_partition};
use sumbed::{
    deepwalk_matrix, factorize, gcn_forward, gcn_forward_summary, heavy_edge_matching,
    line_matrix, restoration_matrix, restore_embeddings, run_verify_suite,
    summarize, summary_deepwalk_matrix, summary_features, EmbeddingMatrix, FactorizeParams,
    GcnModel, LogMode, Partition, Provenance, VerifyConfig, DEFAULT_DENSE_LIMIT,
};

use sumbed::harness::link_prediction_auc;
use sumbed::svd::gaussian_matrix;

#[derive(Parser)]
#[command(name = "sumbed", version, about = "Graph embeddings through summarization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coarsen a graph by heavy-edge matching and write the partition.
    Summarize {
        /// Edge-list file (src dst [weight] per line, # comments).
        #[arg(long)]
        graph: PathBuf,
        /// Stop once at most this many supernodes remain.
        #[arg(long)]
        target_nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Third column of the edge list holds weights.
        #[arg(long)]
        weighted: bool,
        /// Output partition file (node <TAB> supernode).
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute embeddings, either directly or on a summary graph.
    Embed(EmbedOpts),
    /// Expand summary embeddings to all nodes through the restoration map.
    Restore {
        /// Summary embedding TSV (rows are supernode ids 0..n_s-1).
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Kernel exponent c in [0, 1]; 1 repeats rows, 1/2 is the
        /// orthonormal map.
        #[arg(long)]
        c: f64,
        /// Build the map from self-loop-augmented degrees (matches GCN
        /// summary embeddings).
        #[arg(long)]
        augmented: bool,
        #[arg(long)]
        weighted: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the numerical verification battery and write its report.
    /// Exits nonzero when any check fails.
    Verify {
        /// JSON config; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score embeddings by held-out link prediction AUC.
    Eval {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        holdout: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        weighted: bool,
    },
}

#[derive(clap::Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["partition", "direct"])))]
struct EmbedOpts {
    #[arg(long)]
    graph: PathBuf,
    /// Partition file: embed the summary graph (rows are supernodes).
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Embed the full graph directly.
    #[arg(long)]
    direct: bool,
    #[arg(long, value_parser = ["deepwalk", "line", "gcn"])]
    method: String,
    #[arg(long)]
    dim: usize,
    /// Walk window for deepwalk (line always uses 1).
    #[arg(long, default_value_t = 10)]
    window: u32,
    /// Negative-sample weight.
    #[arg(long, default_value_t = 1.0)]
    neg: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// GCN model description (JSON {dims, seed}); default is a
    /// two-layer square stack seeded from --seed.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    weighted: bool,
    /// Cap on dense n x n work.
    #[arg(long, default_value_t = DEFAULT_DENSE_LIMIT)]
    dense_limit: usize,
    #[arg(long)]
    out: PathBuf,
}

fn open_in(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn create_out(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn load_graph(path: &Path, weighted: bool) -> anyhow::Result<LoadedGraph> {
    sumbed::load_edge_list(open_in(path)?, weighted)
        .with_context(|| format!("reading {}", path.display()))
}

fn load_partition_for(loaded: &LoadedGraph, path: &Path) -> anyhow::Result<Partition> {
    read_partition(open_in(path)?, &loaded.ids).with_context(|| format!("reading {}", path.display()))
}

fn walk_params(window: u32, neg: f64) -> anyhow::Result<FactorizeParams> {
    Ok(FactorizeParams::new(window, neg, LogMode::Truncated)?)
}

fn supernode_ids(n_s: usize) -> Vec<u64> {
    (0..n_s as u64).collect()
}

fn cmd_embed(opts: EmbedOpts) -> anyhow::Result<()> {
    let EmbedOpts {
        graph,
        partition,
        direct: _,
        method,
        dim,
        window,
        neg,
        seed,
        model,
        weighted,
        dense_limit,
        out,
    } = opts;
    let loaded = load_graph(&graph, weighted)?;
    let g = &loaded.graph;

    let (ids, values): (Vec<u64>, Array2<f64>) = match (method.as_str(), &partition) {
        ("deepwalk", None) | ("line", None) => {
            let params = walk_params(window, neg)?;
            let m = if method == "line" {
                line_matrix(g, &params, dense_limit)?
            } else {
                deepwalk_matrix(g, &params, dense_limit)?
            };
            let e = factorize(&m.view(), dim, seed)?;
            (loaded.ids.clone(), e.values)
        }
        ("deepwalk", Some(p)) | ("line", Some(p)) => {
            let part = load_partition_for(&loaded, p)?;
            let s = summarize(g, &part)?;
            let params = if method == "line" {
                walk_params(1, neg)?
            } else {
                walk_params(window, neg)?
            };
            let m_s = summary_deepwalk_matrix(&s, &params);
            let e = factorize(&m_s.view(), dim, seed)?;
            (supernode_ids(s.n_s()), e.values)
        }
        ("gcn", maybe_partition) => {
            let spec = match &model {
                Some(path) => GcnModelSpec::read_json(open_in(path)?)?,
                None => GcnModelSpec { dims: vec![dim, dim, dim], seed },
            };
            let net: GcnModel = spec.build()?;
            if net.input_dim() != dim {
                bail!(
                    "model input dim {} does not match --dim {dim}",
                    net.input_dim()
                );
            }
            let x = EmbeddingMatrix {
                values: gaussian_matrix(g.n(), dim, 1.0, seed),
                provenance: Provenance::Direct,
            };
            match maybe_partition {
                None => {
                    let e = gcn_forward(g, &x, &net)?;
                    (loaded.ids.clone(), e.values)
                }
                Some(p) => {
                    let part = load_partition_for(&loaded, p)?;
                    let ag = g.augment()?;
                    let s = summarize(&ag, &part)?;
                    let r = restoration_matrix(&ag, &part, 0.5)?;
                    let x_s = summary_features(&x, &r)?;
                    let e_s = gcn_forward_summary(&s, &x_s, &net)?;
                    (supernode_ids(s.n_s()), e_s.values)
                }
            }
        }
        _ => unreachable!("clap restricts methods"),
    };

    write_embeddings_tsv(create_out(&out)?, &ids, &values.view())?;
    eprintln!("wrote {} embeddings of dim {} to {}", ids.len(), values.ncols(), out.display());
    Ok(())
}

fn cmd_restore(
    embeddings: PathBuf,
    partition: PathBuf,
    graph: PathBuf,
    c: f64,
    augmented: bool,
    weighted: bool,
    out: PathBuf,
) -> anyhow::Result<()> {
    let loaded = load_graph(&graph, weighted)?;
    let part = load_partition_for(&loaded, &partition)?;
    let (ids, values) = read_embeddings_tsv(open_in(&embeddings)?)?;
    if ids.len() != part.supernode_count() {
        bail!(
            "embedding file has {} rows, partition has {} supernodes",
            ids.len(),
            part.supernode_count()
        );
    }
    // Summary embeddings are keyed by dense supernode id; accept any row
    // order but require exactly the ids 0..n_s-1.
    let mut ordered = Array2::<f64>::zeros((ids.len(), values.ncols()));
    for (row, &id) in ids.iter().enumerate() {
        let id = id as usize;
        if id >= part.supernode_count() {
            bail!("embedding row {id} is not a supernode id");
        }
        ordered.row_mut(id).assign(&values.row(row));
    }
    let base = if augmented { loaded.graph.augment()? } else { loaded.graph.clone() };
    let r = restoration_matrix(&base, &part, c)?;
    let e_s = EmbeddingMatrix { values: ordered, provenance: Provenance::Summary };
    let e = restore_embeddings(&e_s, &r)?;
    write_embeddings_tsv(create_out(&out)?, &loaded.ids, &e.values.view())?;
    eprintln!("restored {} node embeddings to {}", loaded.ids.len(), out.display());
    Ok(())
}

fn main() -> anyhow::Result<std::process::ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Summarize { graph, target_nodes, seed, weighted, out } => {
            let loaded = load_graph(&graph, weighted)?;
            let p = heavy_edge_matching(&loaded.graph, target_nodes, seed)?;
            write_partition(create_out(&out)?, &p, &loaded.ids)?;
            eprintln!(
                "coarsened {} nodes to {} supernodes (target {target_nodes}) in {}",
                loaded.graph.n(),
                p.supernode_count(),
                out.display()
            );
        }
        Command::Embed(opts) => cmd_embed(opts)?,
        Command::Restore { embeddings, partition, graph, c, augmented, weighted, out } => {
            cmd_restore(embeddings, partition, graph, c, augmented, weighted, out)?;
        }
        Command::Verify { config, out } => {
            let cfg: VerifyConfig = match config {
                Some(path) => serde_json::from_reader(open_in(&path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
                None => VerifyConfig::default(),
            };
            let report = run_verify_suite(&cfg)?;
            report.write_json(create_out(&out)?)?;
            let failed = report.failed();
            println!(
                "{} checks, {} failed: {}",
                report.checks.len(),
                failed.len(),
                if report.pass { "PASS" } else { "FAIL" }
            );
            for f in failed.iter().take(20) {
                println!("  FAIL {} on {} (measured {:e}, limit {:e})", f.name, f.instance, f.measured, f.limit);
            }
            if !report.pass {
                return Ok(std::process::ExitCode::from(1));
            }
        }
        Command::Eval { graph, embeddings, holdout, seed, weighted } => {
            let loaded = load_graph(&graph, weighted)?;
            let (ids, values) = read_embeddings_tsv(open_in(&embeddings)?)?;
            if ids != loaded.ids {
                bail!("embedding node ids do not match the graph's node set");
            }
            let e = EmbeddingMatrix { values, provenance: Provenance::Direct };
            let auc = link_prediction_auc(&loaded.graph, &e, holdout, seed)?;
            println!("auc\t{auc:.6}");
        }
    }
    Ok(std::process::ExitCode::SUCCESS)
}
