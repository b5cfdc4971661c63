//! The clustering criterion `1/2 ||Y mu - X W||_F^2`, its gradient in `W`,
//! and the centroid map.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{CentroidMatrix, DataMatrix, LabelAssignment, WeightMatrix};

fn check_dims(
    x: &DataMatrix,
    w: &WeightMatrix,
    labels: &LabelAssignment,
    mu: &CentroidMatrix,
) -> Result<()> {
    let mismatch = |axis, expected, got| Err(Error::DimensionMismatch { axis, expected, got });
    if w.features() != x.cols() {
        return mismatch("W rows vs X columns (d)", x.cols(), w.features());
    }
    if labels.len() != x.rows() {
        return mismatch("labels vs X rows (m)", x.rows(), labels.len());
    }
    if mu.dbar() != w.dbar() {
        return mismatch("mu columns vs W columns (dbar)", w.dbar(), mu.dbar());
    }
    if mu.k() != labels.k() {
        return mismatch("mu rows vs cluster count (k)", labels.k(), mu.k());
    }
    Ok(())
}

/// `Y mu`: row `i` is centroid `labels[i]`.
pub(crate) fn gather_centroids(labels: &[usize], mu: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = Array2::zeros((labels.len(), mu.ncols()));
    for (i, &l) in labels.iter().enumerate() {
        out.row_mut(i).assign(&mu.row(l));
    }
    out
}

/// `X W - Y mu`.
pub(crate) fn residual(
    x: &DataMatrix,
    wt: ArrayView2<'_, f64>,
    labels: &[usize],
    mu: ArrayView2<'_, f64>,
) -> Array2<f64> {
    let mut r = linalg::times_weights(x, wt);
    for (i, &l) in labels.iter().enumerate() {
        let mut row = r.row_mut(i);
        row -= &mu.row(l);
    }
    r
}

/// `1/2 ||Y mu - X W||_F^2`.
pub fn objective(
    x: &DataMatrix,
    w: &WeightMatrix,
    labels: &LabelAssignment,
    mu: &CentroidMatrix,
) -> Result<f64> {
    check_dims(x, w, labels, mu)?;
    let wt = w.view().reversed_axes();
    let r = residual(x, wt, labels.labels(), mu.view());
    Ok(linalg::half_sq_norm(r.view()))
}

/// Unsquared residual `||Y mu - X W||_F`, the quantity reported per outer loop.
pub fn frobenius_residual(
    x: &DataMatrix,
    w: &WeightMatrix,
    labels: &LabelAssignment,
    mu: &CentroidMatrix,
) -> Result<f64> {
    Ok((2.0 * objective(x, w, labels, mu)?).sqrt())
}

/// `X^T (X W - Y mu)`, shape `d x dbar`.
pub fn gradient(
    x: &DataMatrix,
    w: &WeightMatrix,
    labels: &LabelAssignment,
    mu: &CentroidMatrix,
) -> Result<Array2<f64>> {
    check_dims(x, w, labels, mu)?;
    let wt = w.view().reversed_axes();
    let r = residual(x, wt, labels.labels(), mu.view());
    Ok(linalg::transpose_times(x, r.view()).reversed_axes())
}

/// Per-cluster means of the rows of `z`.
pub(crate) fn cluster_means(labels: &[usize], k: usize, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if labels.len() != z.nrows() {
        return Err(Error::DimensionMismatch {
            axis: "labels vs Z rows",
            expected: z.nrows(),
            got: labels.len(),
        });
    }
    let mut sums = Array2::zeros((k, z.ncols()));
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        if l >= k {
            return Err(Error::LabelOutOfRange { sample: i, label: l, k });
        }
        let mut row = sums.row_mut(l);
        row += &z.row(i);
        counts[l] += 1;
    }
    for (j, &n) in counts.iter().enumerate() {
        if n == 0 {
            return Err(Error::EmptyCluster { cluster: j });
        }
        let mut row = sums.row_mut(j);
        row /= n as f64;
    }
    Ok(sums)
}

/// Centroids of `z` (`m x dbar`) under `labels`: row `j` is the mean of the
/// rows assigned to cluster `j`.
pub fn centroids(labels: &LabelAssignment, z: ArrayView2<'_, f64>) -> Result<CentroidMatrix> {
    cluster_means(labels.labels(), labels.k(), z).map(CentroidMatrix::new)
}

/// Estimate of the largest singular value of `X`, using a fixed start vector
/// (seed 0).
pub fn spectral_norm(x: &DataMatrix, power_iters: usize, power_tol: f64) -> Result<f64> {
    linalg::spectral_norm_seeded(x, power_iters, power_tol, 0)
}
