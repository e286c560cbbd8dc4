//! Singular value decompositions without external linear-algebra bindings.
//!
//! The exact path is a one-sided Jacobi SVD (Hestenes rotations until all
//! column pairs are orthogonal); it is single-threaded and bit-for-bit
//! deterministic, which the seeded factorization contract depends on. On
//! top of it sits a randomized range-finder (Gaussian sketch, QR
//! re-orthonormalization, power iterations) for large matrices.

use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Thin SVD `M = U diag(sigma) V^T` with `sigma` descending.
/// `u` is `m x k`, `v` is `n x k`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Array2<f64>,
    pub sigma: Vec<f64>,
    pub v: Array2<f64>,
}

/// Matrices whose short side is at most this use the exact dense path.
pub const DENSE_SVD_CUTOFF: usize = 500;

/// Oversampling columns added to the sketch in the randomized path.
pub const OVERSAMPLE: usize = 10;

/// Power iterations in the randomized path.
pub const POWER_ITERATIONS: usize = 7;

/// Full SVD by one-sided Jacobi. Exact up to round-off; O(min(m,n)^2 *
/// max(m,n)) per sweep, fine for desk-scale matrices.
pub fn dense_svd(m: &ArrayView2<f64>) -> Svd {
    if m.nrows() >= m.ncols() {
        jacobi_tall(m)
    } else {
        // Work on the transpose and swap factors back.
        let t = m.t().to_owned();
        let svd = jacobi_tall(&t.view());
        Svd { u: svd.v, sigma: svd.sigma, v: svd.u }
    }
}

fn jacobi_tall(m: &ArrayView2<f64>) -> Svd {
    let (rows, cols) = (m.nrows(), m.ncols());
    debug_assert!(rows >= cols);
    let mut a = m.to_owned();
    let mut v = Array2::<f64>::eye(cols);

    const MAX_SWEEPS: usize = 64;
    const TOL: f64 = 1e-15;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in (p + 1)..cols {
                let (mut app, mut aqq, mut apq) = (0.0, 0.0, 0.0);
                for r in 0..rows {
                    let (x, y) = (a[[r, p]], a[[r, q]]);
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq == 0.0 || apq.abs() <= TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let (x, y) = (a[[r, p]], a[[r, q]]);
                    a[[r, p]] = c * x - s * y;
                    a[[r, q]] = s * x + c * y;
                }
                for r in 0..cols {
                    let (x, y) = (v[[r, p]], v[[r, q]]);
                    v[[r, p]] = c * x - s * y;
                    v[[r, q]] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols)
        .map(|j| a.column(j).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let mut u = Array2::<f64>::zeros((rows, cols));
    let mut vv = Array2::<f64>::zeros((cols, cols));
    let mut sigma = Vec::with_capacity(cols);
    for (out_j, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > 0.0 {
            let col = a.column(j).mapv(|x| x / s);
            u.column_mut(out_j).assign(&col);
        }
        vv.column_mut(out_j).assign(&v.column(j));
    }
    Svd { u, sigma, v: vv }
}

/// Orthonormalizes the columns of `y` by modified Gram-Schmidt, run twice
/// for stability. Numerically dependent columns come out as zeros.
pub fn orthonormalize(y: &ArrayView2<f64>) -> Array2<f64> {
    let mut q = y.to_owned();
    let k = q.ncols();
    for _pass in 0..2 {
        for j in 0..k {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).to_owned();
                q.column_mut(j).scaled_add(-proj, &qi);
            }
            let norm = q.column(j).dot(&q.column(j)).sqrt();
            if norm > 1e-300 {
                q.column_mut(j).mapv_inplace(|x| x / norm);
            } else {
                q.column_mut(j).fill(0.0);
            }
        }
    }
    q
}

/// Seeded Gaussian matrix, entries N(0, std^2).
pub fn gaussian_matrix(rows: usize, cols: usize, std: f64, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * std
    })
}

/// Rank-`rank` randomized SVD (Gaussian range finder with oversampling
/// and power iterations). Deterministic for a fixed seed.
pub fn randomized_svd(m: &ArrayView2<f64>, rank: usize, seed: u64) -> Result<Svd> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let short = rows.min(cols);
    if rank == 0 || rank > short {
        return Err(Error::InvalidArgument(format!(
            "rank must be in 1..={short}, got {rank}"
        )));
    }
    let sketch = (rank + OVERSAMPLE).min(short);
    let omega = gaussian_matrix(cols, sketch, 1.0, seed);
    let mut q = orthonormalize(&m.dot(&omega).view());
    for _ in 0..POWER_ITERATIONS {
        let z = orthonormalize(&m.t().dot(&q).view());
        q = orthonormalize(&m.dot(&z).view());
    }
    let b = q.t().dot(m); // sketch x cols
    let small = dense_svd(&b.view());
    let u_full = q.dot(&small.u);

    let u = u_full.slice_axis(Axis(1), (0..rank).into()).to_owned();
    let v = small.v.slice_axis(Axis(1), (0..rank).into()).to_owned();
    let sigma = small.sigma[..rank].to_vec();
    Ok(Svd { u, sigma, v })
}

/// Rank-`rank` truncated SVD: exact dense path when the short side is at
/// most [`DENSE_SVD_CUTOFF`], randomized otherwise.
pub fn truncated_svd(m: &ArrayView2<f64>, rank: usize, seed: u64) -> Result<Svd> {
    let short = m.nrows().min(m.ncols());
    if rank == 0 || rank > short {
        return Err(Error::InvalidArgument(format!(
            "rank must be in 1..={short}, got {rank}"
        )));
    }
    if short <= DENSE_SVD_CUTOFF {
        let full = dense_svd(m);
        let u = full.u.slice_axis(Axis(1), (0..rank).into()).to_owned();
        let v = full.v.slice_axis(Axis(1), (0..rank).into()).to_owned();
        Ok(Svd { u, sigma: full.sigma[..rank].to_vec(), v })
    } else {
        randomized_svd(m, rank, seed)
    }
}
