//! Graph embedding through summarization.
//!
//! Coarsen a graph onto supernodes, learn embeddings on the small summary,
//! and expand them back to all nodes with closed-form restoration maps.
//! The central fact making this sound: for degree-proportional
//! reconstruction, the degree-normalized kernel of the reconstructed graph
//! equals the restored summary kernel exactly, so working on the summary
//! loses only what the reconstruction itself loses, and that loss has a
//! computable bound.
//!
//! Modules:
//! - [`graph`]: CSR graphs, degrees, edge-list IO.
//! - [`summarize`]: partitions, summary graphs, reconstruction, coarsening.
//! - [`kernel`]: normalized kernels, restoration maps, error bounds.
//! - [`factor`]: random-walk matrices, truncated SVD embeddings, TSV IO.
//! - [`gcn`]: graph-convolution forward passes on either side.
//! - [`svd`]: deterministic dense and randomized decompositions.
//! - [`harness`]: seeded instances, fixtures, link-prediction scoring.
//! - [`verify`]: the numerical verification battery and its report.

pub mod error;
pub mod factor;
pub mod gcn;
pub mod graph;
pub mod harness;
pub mod kernel;
pub mod linmap;
pub mod summarize;
pub mod svd;
pub mod verify;

pub use error::{Error, Result};
pub use factor::{
    deepwalk_matrix, factorize, line_matrix, read_embeddings_tsv, restore_embeddings,
    summary_deepwalk_matrix, write_embeddings_tsv, EmbeddingMatrix, FactorizeParams, LogMode,
    Provenance,
};
pub use gcn::{
    gcn_forward, gcn_forward_summary, gcn_restoration_bound, gcn_restore, summary_features,
    GcnModel, GcnModelSpec,
};
pub use graph::{frobenius_norm, load_edge_list, DegreeVector, Graph, LoadedGraph};
pub use kernel::{
    kernel_error_bound, kernel_of_graph, kernel_of_summary, kernel_restoration_error,
    restoration_matrix, restore_kernel, BoundReport, KernelMatrix, KernelParams, KernelSource,
};
pub use linmap::{LinearMap, MapRole};
pub use summarize::{
    heavy_edge_matching, membership_matrix, read_partition, reconstruct, reconstruction_matrix,
    summarize, write_partition, Partition, SummaryGraph,
};
pub use verify::{run_verify_suite, CheckRecord, VerifyConfig, VerifyReport};

/// Default cap on materializing dense n x n matrices.
pub const DEFAULT_DENSE_LIMIT: usize = 2000;
