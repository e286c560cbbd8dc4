//! Graph convolutional propagation on original and summary graphs.
//!
//! One layer maps `E` to `relu(D~^-1/2 A~ D~^-1/2 E W)` where `A~` is the
//! self-loop-augmented adjacency and `D~` its degrees. Summary-side
//! propagation runs the same layer on a summary of the augmented graph
//! with compressed features `X_s = R^T X`, sharing the weight stack, and
//! the result expands back through `R` (built from augmented degrees at
//! `c = 1/2`, so `R^T R = I`).
//!
//! [`gcn_restoration_bound`] compares the two flows and reports the error
//! bound `||D~^-1/2 (A~ - A~_r) D~^-1/2||_F * prod_l ||W_l||_F *
//! ||X||_F`. The bound is exact analysis for one layer; for deeper stacks
//! the nonlinearity makes it heuristic, and the harness checks it
//! empirically.

use std::io::{BufRead, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{EmbeddingMatrix, Provenance};
use crate::graph::{frobenius_norm, Apply, Graph};
use crate::kernel::{restoration_matrix, BoundReport};
use crate::linmap::{LinearMap, MapRole};
use crate::summarize::{reconstruct, reconstruction_matrix, summarize, Partition, SummaryGraph};
use crate::svd::gaussian_matrix;

/// Stack of dense layer weights with matching inner dimensions.
#[derive(Debug, Clone)]
pub struct GcnModel {
    weights: Vec<Array2<f64>>,
}

impl GcnModel {
    pub fn new(weights: Vec<Array2<f64>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("model needs at least one layer".into()));
        }
        for k in 1..weights.len() {
            if weights[k].nrows() != weights[k - 1].ncols() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {k} expects {} inputs, previous layer emits {}",
                    weights[k].nrows(),
                    weights[k - 1].ncols()
                )));
            }
        }
        Ok(GcnModel { weights })
    }

    /// Seeded Gaussian initialization, std `1/sqrt(fan_in)` per layer.
    /// `dims` lists layer widths, so `dims.len() - 1` layers.
    pub fn seeded(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidArgument(
                "dims must list at least two positive layer widths".into(),
            ));
        }
        let weights = dims
            .windows(2)
            .enumerate()
            .map(|(k, w)| gaussian_matrix(w[0], w[1], 1.0 / (w[0] as f64).sqrt(), seed.wrapping_add(k as u64)))
            .collect();
        Ok(GcnModel { weights })
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, l: usize) -> &Array2<f64> {
        &self.weights[l]
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().unwrap().ncols()
    }

    pub fn weight_norms(&self) -> Vec<f64> {
        self.weights.iter().map(|w| frobenius_norm(&w.view())).collect()
    }
}

/// Serializable model description: layer widths plus the init seed.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GcnModelSpec {
    pub dims: Vec<usize>,
    pub seed: u64,
}

impl GcnModelSpec {
    pub fn build(&self) -> Result<GcnModel> {
        GcnModel::seeded(&self.dims, self.seed)
    }

    pub fn read_json<R: BufRead>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        Ok(serde_json::to_writer_pretty(writer, self)?)
    }
}

fn relu_inplace(m: &mut Array2<f64>) {
    m.mapv_inplace(|x| x.max(0.0));
}

/// Runs the layer stack on an already-augmented graph, returning every
/// intermediate state `E_0..E_K`.
fn propagate_layers(g: &Graph, x: &Array2<f64>, model: &GcnModel) -> Result<Vec<Array2<f64>>> {
    if x.nrows() != g.n() {
        return Err(Error::ShapeMismatch(format!(
            "{} feature rows for a graph of {} nodes",
            x.nrows(),
            g.n()
        )));
    }
    if x.ncols() != model.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "feature dim {} does not match model input dim {}",
            x.ncols(),
            model.input_dim()
        )));
    }
    let inv_sqrt: Vec<f64> = g.degrees().as_slice().iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut states = Vec::with_capacity(model.layer_count() + 1);
    states.push(x.clone());
    let mut e = x.clone();
    for w in &model.weights {
        for (i, mut row) in e.rows_mut().into_iter().enumerate() {
            let v = inv_sqrt[i];
            row.mapv_inplace(|val| val * v);
        }
        let mut z = g.apply(&e.view());
        for (i, mut row) in z.rows_mut().into_iter().enumerate() {
            let v = inv_sqrt[i];
            row.mapv_inplace(|val| val * v);
        }
        let mut next = z.dot(w);
        relu_inplace(&mut next);
        states.push(next.clone());
        e = next;
    }
    Ok(states)
}

/// Forward pass on the original graph; `g` is augmented internally, so it
/// must not already carry self-loops.
pub fn gcn_forward(g: &Graph, x: &EmbeddingMatrix, model: &GcnModel) -> Result<EmbeddingMatrix> {
    let ag = g.augment()?;
    let states = propagate_layers(&ag, &x.values, model)?;
    Ok(EmbeddingMatrix { values: states.last().unwrap().clone(), provenance: Provenance::Direct })
}

/// Forward pass returning all intermediate layers, for norm diagnostics.
pub fn gcn_forward_layers(g: &Graph, x: &EmbeddingMatrix, model: &GcnModel) -> Result<Vec<Array2<f64>>> {
    let ag = g.augment()?;
    propagate_layers(&ag, &x.values, model)
}

/// Compresses node features for the summary side: `X_s = R^T X`.
pub fn summary_features(x: &EmbeddingMatrix, r: &LinearMap) -> Result<EmbeddingMatrix> {
    r.expect_role(MapRole::Restoration)?;
    if r.node_count() != x.values.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "map covers {} nodes, features have {} rows",
            r.node_count(),
            x.values.nrows()
        )));
    }
    Ok(EmbeddingMatrix { values: r.apply_transpose(&x.values.view())?, provenance: Provenance::Summary })
}

/// Forward pass on a summary graph. The summary must come from the
/// augmented source graph (its self-loops already carry the added
/// identity), so no further augmentation happens here.
pub fn gcn_forward_summary(s: &SummaryGraph, x_s: &EmbeddingMatrix, model: &GcnModel) -> Result<EmbeddingMatrix> {
    let states = propagate_layers(&s.graph, &x_s.values, model)?;
    Ok(EmbeddingMatrix { values: states.last().unwrap().clone(), provenance: Provenance::Summary })
}

/// Expands summary GCN outputs back to node space: `E = R E_s`.
pub fn gcn_restore(e_s: &EmbeddingMatrix, r: &LinearMap) -> Result<EmbeddingMatrix> {
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

/// Compares direct propagation against restored summary propagation and
/// reports `||E - R E_s||_F` with its computable bound
/// `||D~^-1/2 (A~ - A~_r) D~^-1/2||_F * prod ||W_l||_F * ||X||_F`.
/// Restoration uses `c = 1/2` on the augmented graph.
pub fn gcn_restoration_bound(
    g: &Graph,
    p: &Partition,
    model: &GcnModel,
    x: &EmbeddingMatrix,
    dense_limit: usize,
) -> Result<BoundReport> {
    if g.n() > dense_limit {
        return Err(Error::DenseLimit { n: g.n(), limit: dense_limit });
    }
    let ag = g.augment()?;
    let s = summarize(&ag, p)?;
    let r = restoration_matrix(&ag, p, 0.5)?;

    let direct = propagate_layers(&ag, &x.values, model)?;
    let e_direct = direct.last().unwrap();

    let x_s = summary_features(x, &r)?;
    let e_s = gcn_forward_summary(&s, &x_s, model)?;
    let restored = gcn_restore(&e_s, &r)?;

    let actual_error = frobenius_norm(&(e_direct - &restored.values).view());

    let q = reconstruction_matrix(&ag, p)?;
    let a_r = reconstruct(&s, &q)?;
    let inv_sqrt: Vec<f64> = ag.degrees().as_slice().iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut diff = ag.to_dense() - &a_r;
    for i in 0..ag.n() {
        for j in 0..ag.n() {
            diff[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let normalized_diff = frobenius_norm(&diff.view());
    let weight_product: f64 = model.weight_norms().iter().product();
    let feature_norm = frobenius_norm(&x.values.view());
    let bound = normalized_diff * weight_product * feature_norm;

    Ok(BoundReport {
        actual_error,
        bound,
        constant_used: weight_product * feature_norm,
        normalized_diff,
        d_min: ag.degrees().min(),
        published_constant: None,
        published_bound: None,
    })
}
