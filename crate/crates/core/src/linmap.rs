//! Structured maps between node space and supernode space.
//!
//! All three maps used here (membership, reconstruction, restoration) have
//! exactly one nonzero per node row or column, so one compact layout holds
//! them: per node, the supernode it points to and the nonzero's value.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapRole {
    /// `n_s x n` 0/1 matrix P with P(p, i) = 1 iff node i belongs to p.
    Membership,
    /// `n x n_s` matrix Q with Q(i, p) = d_i / d_p for i in p, else 0.
    Reconstruction,
    /// `n x n_s` matrix R with R(i, p) = (d_i / d_p)^(1-c) for i in p.
    Restoration,
}

/// One of the three node/supernode maps, stored as (assignment, value)
/// per node. `Membership` is `n_s x n`; the other two are `n x n_s`.
#[derive(Debug, Clone)]
pub struct LinearMap {
    role: MapRole,
    n: usize,
    n_s: usize,
    assign: Vec<usize>,
    values: Vec<f64>,
}

impl LinearMap {
    pub(crate) fn new(role: MapRole, n_s: usize, assign: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(assign.len(), values.len());
        debug_assert!(assign.iter().all(|&p| p < n_s));
        LinearMap { role, n: assign.len(), n_s, assign, values }
    }

    pub fn role(&self) -> MapRole {
        self.role
    }

    pub fn rows(&self) -> usize {
        match self.role {
            MapRole::Membership => self.n_s,
            _ => self.n,
        }
    }

    pub fn cols(&self) -> usize {
        match self.role {
            MapRole::Membership => self.n,
            _ => self.n_s,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn supernode_count(&self) -> usize {
        self.n_s
    }

    /// The nonzero of node `i`'s row (or column, for membership).
    pub fn nonzero(&self, i: usize) -> (usize, f64) {
        (self.assign[i], self.values[i])
    }

    pub(crate) fn expect_role(&self, expected: MapRole) -> Result<()> {
        if self.role != expected {
            return Err(Error::RoleMismatch { expected, found: self.role });
        }
        Ok(())
    }

    /// `M * X`.
    pub fn apply(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.cols() {
            return Err(Error::ShapeMismatch(format!(
                "map is {}x{}, operand has {} rows",
                self.rows(),
                self.cols(),
                x.nrows()
            )));
        }
        let d = x.ncols();
        let mut out = Array2::zeros((self.rows(), d));
        match self.role {
            MapRole::Membership => {
                for i in 0..self.n {
                    let p = self.assign[i];
                    let mut row = out.row_mut(p);
                    row.scaled_add(1.0, &x.row(i));
                }
            }
            _ => {
                for i in 0..self.n {
                    let p = self.assign[i];
                    let v = self.values[i];
                    out.row_mut(i).assign(&x.row(p));
                    out.row_mut(i).mapv_inplace(|e| e * v);
                }
            }
        }
        Ok(out)
    }

    /// `M^T * X`.
    pub fn apply_transpose(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.rows() {
            return Err(Error::ShapeMismatch(format!(
                "map transpose is {}x{}, operand has {} rows",
                self.cols(),
                self.rows(),
                x.nrows()
            )));
        }
        let d = x.ncols();
        let mut out = Array2::zeros((self.cols(), d));
        match self.role {
            MapRole::Membership => {
                for i in 0..self.n {
                    out.row_mut(i).assign(&x.row(self.assign[i]));
                }
            }
            _ => {
                for i in 0..self.n {
                    let p = self.assign[i];
                    let v = self.values[i];
                    let mut row = out.row_mut(p);
                    row.scaled_add(v, &x.row(i));
                }
            }
        }
        Ok(out)
    }

    /// `M * X * M^T` for square `X`.
    pub fn sandwich(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.cols() || x.ncols() != self.cols() {
            return Err(Error::ShapeMismatch(format!(
                "sandwich operand must be {0}x{0}, got {1}x{2}",
                self.cols(),
                x.nrows(),
                x.ncols()
            )));
        }
        let r = self.rows();
        let mut out = Array2::zeros((r, r));
        match self.role {
            MapRole::Membership => {
                for i in 0..self.n {
                    for j in 0..self.n {
                        out[[self.assign[i], self.assign[j]]] += x[[i, j]];
                    }
                }
            }
            _ => {
                for i in 0..self.n {
                    let (p, vi) = (self.assign[i], self.values[i]);
                    for j in 0..self.n {
                        out[[i, j]] = vi * x[[p, self.assign[j]]] * self.values[j];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `M^T M` (dense, `cols x cols`). For reconstruction and restoration
    /// maps this is diagonal by construction.
    pub fn gram(&self) -> Array2<f64> {
        let c = self.cols();
        let mut out = Array2::zeros((c, c));
        match self.role {
            MapRole::Membership => {
                // (P^T P)(i, j) = 1 iff i and j share a block.
                for i in 0..self.n {
                    for j in 0..self.n {
                        if self.assign[i] == self.assign[j] {
                            out[[i, j]] = 1.0;
                        }
                    }
                }
            }
            _ => {
                for i in 0..self.n {
                    let p = self.assign[i];
                    out[[p, p]] += self.values[i] * self.values[i];
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows(), self.cols()));
        for i in 0..self.n {
            let (p, v) = (self.assign[i], self.values[i]);
            match self.role {
                MapRole::Membership => out[[p, i]] = v,
                _ => out[[i, p]] = v,
            }
        }
        out
    }
}
