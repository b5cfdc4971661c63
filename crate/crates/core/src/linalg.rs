//! The handful of dense kernels the solvers need.
//!
//! Weights are handled here in transposed form (`dbar x d`, one row per
//! projected coordinate) so that both products stream contiguous rows of `X`.
//! Every reduction runs over samples in ascending order, which keeps results
//! bitwise identical whatever the thread count.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::DataMatrix;

/// Below this fraction of non-zero weight rows `X W` only touches those rows.
pub const SPARSE_ROW_FRACTION: f64 = 0.25;

const COLUMN_BLOCK: usize = 512;

/// Indices `j` for which column `j` of `wt` (row `j` of `W`) has a non-zero.
pub(crate) fn active_features(wt: ArrayView2<'_, f64>) -> Vec<usize> {
    let d = wt.ncols();
    let mut active = vec![false; d];
    for row in wt.rows() {
        for (j, v) in row.iter().enumerate() {
            if *v != 0.0 {
                active[j] = true;
            }
        }
    }
    (0..d).filter(|&j| active[j]).collect()
}

/// `X W` for `wt = W^T`, returning `m x dbar`.
pub(crate) fn times_weights(x: &DataMatrix, wt: ArrayView2<'_, f64>) -> Array2<f64> {
    let active = active_features(wt);
    if (active.len() as f64) < SPARSE_ROW_FRACTION * x.cols() as f64 {
        times_weights_on(x, wt, &active)
    } else {
        times_weights_dense(x, wt)
    }
}

/// Sparse path: sums only over `active` features, in ascending order.
pub(crate) fn times_weights_on(
    x: &DataMatrix,
    wt: ArrayView2<'_, f64>,
    active: &[usize],
) -> Array2<f64> {
    let (m, dbar) = (x.rows(), wt.nrows());
    // gather the active columns of W^T once: active.len() x dbar
    let mut packed = Vec::with_capacity(active.len() * dbar);
    for &j in active {
        for c in 0..dbar {
            packed.push(wt[[c, j]]);
        }
    }
    let mut out = Array2::zeros((m, dbar));
    for i in 0..m {
        let xi = x.row(i);
        let acc = out.row_mut(i).into_slice().expect("contiguous row");
        for (a, &j) in active.iter().enumerate() {
            let v = xi[j];
            let w = &packed[a * dbar..(a + 1) * dbar];
            for c in 0..dbar {
                acc[c] += v * w[c];
            }
        }
    }
    out
}

/// Dense path with the same summation order as the sparse one.
pub(crate) fn times_weights_dense(x: &DataMatrix, wt: ArrayView2<'_, f64>) -> Array2<f64> {
    let all: Vec<usize> = (0..x.cols()).collect();
    times_weights_on(x, wt, &all)
}

/// `(X^T R)^T`, i.e. `dbar x d`, for `r` of shape `m x dbar`.
pub(crate) fn transpose_times(x: &DataMatrix, r: ArrayView2<'_, f64>) -> Array2<f64> {
    let (m, d) = (x.rows(), x.cols());
    let dbar = r.ncols();
    let r = r.as_standard_layout();
    let r = r.as_slice().expect("standard layout");

    let block = |start: usize| -> Vec<f64> {
        let width = COLUMN_BLOCK.min(d - start);
        let mut buf = vec![0.0; width * dbar];
        for i in 0..m {
            let xi = &x.row(i)[start..start + width];
            let ri = &r[i * dbar..(i + 1) * dbar];
            for (c, &a) in ri.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out = &mut buf[c * width..(c + 1) * width];
                for (o, &v) in out.iter_mut().zip(xi) {
                    *o += a * v;
                }
            }
        }
        buf
    };

    let starts: Vec<usize> = (0..d).step_by(COLUMN_BLOCK).collect();
    #[cfg(feature = "parallel")]
    let blocks: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        starts.par_iter().map(|&s| block(s)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let blocks: Vec<Vec<f64>> = starts.iter().map(|&s| block(s)).collect();

    let mut out = Array2::zeros((dbar, d));
    for (&start, buf) in starts.iter().zip(&blocks) {
        let width = COLUMN_BLOCK.min(d - start);
        for c in 0..dbar {
            for t in 0..width {
                out[[c, start + t]] = buf[c * width + t];
            }
        }
    }
    out
}

/// Half the squared Frobenius norm.
pub(crate) fn half_sq_norm(a: ArrayView2<'_, f64>) -> f64 {
    0.5 * a.iter().map(|v| v * v).sum::<f64>()
}

/// Deterministic pseudo-random unit vector of length `n`.
pub(crate) fn seeded_unit_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 {
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|a| *a /= norm);
    }
    v
}

/// Largest singular value of `X` by power iteration on `X^T X`.
///
/// Stops when the Rayleigh quotient changes by less than `tol` relative, or
/// after `max_iters` iterations. The start vector is drawn from `seed`.
pub fn spectral_norm_seeded(x: &DataMatrix, max_iters: usize, tol: f64, seed: u64) -> Result<f64> {
    if max_iters == 0 {
        return Err(Error::invalid("power_iters", "must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("power_tol", "must be positive"));
    }
    let d = x.cols();
    let mut v = Array2::from_shape_vec((1, d), seeded_unit_vector(d, seed)).expect("shape");
    let mut estimate = 0.0_f64;
    for _ in 0..max_iters {
        let u = times_weights_dense(x, v.view());
        let lambda = u.iter().map(|a| a * a).sum::<f64>();
        let mut next = transpose_times(x, u.view());
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            // start vector orthogonal to the row space; restart elsewhere
            if estimate == 0.0 {
                v = Array2::from_shape_vec((1, d), seeded_unit_vector(d, seed.wrapping_add(1)))
                    .expect("shape");
                continue;
            }
            break;
        }
        next.mapv_inplace(|a| a / norm);
        v = next;
        let converged = estimate > 0.0 && (lambda - estimate).abs() <= tol * lambda;
        estimate = lambda;
        if converged {
            break;
        }
    }
    // one last Rayleigh quotient with the final vector
    let u = times_weights_dense(x, v.view());
    let lambda = u.iter().map(|a| a * a).sum::<f64>().max(estimate);
    if lambda <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(lambda.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> DataMatrix {
        DataMatrix::new(array![[1.0, 0.0, 2.0, -1.0], [0.5, 3.0, 0.0, 1.0], [2.0, 1.0, 1.0, 0.0]])
            .unwrap()
    }

    #[test]
    fn sparse_and_dense_products_agree() {
        let x = sample();
        let wt = array![[0.0, 1.0, 0.0, 0.0], [0.0, -2.0, 0.0, 0.5]];
        let dense = times_weights_dense(&x, wt.view());
        let sparse = times_weights_on(&x, wt.view(), &active_features(wt.view()));
        assert_eq!(dense, sparse);
        let direct = x.as_array().dot(&wt.t());
        for (a, b) in dense.iter().zip(direct.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn transpose_product_matches_ndarray() {
        let x = sample();
        let r = array![[1.0, 2.0], [0.0, -1.0], [0.5, 0.25]];
        let got = transpose_times(&x, r.view());
        let want = x.as_array().t().dot(&r).reversed_axes();
        for (a, b) in got.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn wide_matrix_crosses_block_boundary() {
        let d = COLUMN_BLOCK + 37;
        let data: Vec<f64> = (0..3 * d).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let x = DataMatrix::from_shape_vec(3, d, data).unwrap();
        let r = array![[1.0], [-2.0], [0.5]];
        let got = transpose_times(&x, r.view());
        let want = x.as_array().t().dot(&r);
        for j in 0..d {
            assert!((got[[0, j]] - want[[j, 0]]).abs() < 1e-12);
        }
    }
}
