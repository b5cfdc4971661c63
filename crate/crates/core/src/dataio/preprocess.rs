use crate::error::{Error, Result};
use crate::linalg::spectral_norm_seeded;
use crate::types::DataMatrix;

/// Keeps feature `j` iff at least `min_cells` samples have `X[i, j] >=
/// min_count`. Returns the reduced matrix and the kept indices in order.
pub fn filter_low_expressed(
    x: &DataMatrix,
    min_count: f64,
    min_cells: usize,
) -> Result<(DataMatrix, Vec<usize>)> {
    if min_cells > x.rows() {
        return Err(Error::invalid(
            "min_cells",
            format!("{min_cells} exceeds the number of samples {}", x.rows()),
        ));
    }
    let mut hits = vec![0usize; x.cols()];
    for i in 0..x.rows() {
        for (h, &v) in hits.iter_mut().zip(x.row(i)) {
            if v >= min_count {
                *h += 1;
            }
        }
    }
    let kept: Vec<usize> = (0..x.cols()).filter(|&j| hits[j] >= min_cells).collect();
    if kept.is_empty() {
        return Err(Error::AllFeaturesRemoved);
    }
    let mut values = Vec::with_capacity(x.rows() * kept.len());
    for i in 0..x.rows() {
        let row = x.row(i);
        values.extend(kept.iter().map(|&j| row[j]));
    }
    Ok((DataMatrix::from_shape_vec(x.rows(), kept.len(), values)?, kept))
}

/// Rescales every sample to a total of one million.
pub fn cpm_normalize(x: &DataMatrix) -> Result<DataMatrix> {
    let mut values = Vec::with_capacity(x.rows() * x.cols());
    for i in 0..x.rows() {
        let row = x.row(i);
        if let Some(col) = row.iter().position(|&v| v < 0.0) {
            return Err(Error::NegativeCount {
                row: i,
                col,
                value: row[col],
            });
        }
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroRowSum { sample: i.to_string() });
        }
        values.extend(row.iter().map(|&v| v / total * 1e6));
    }
    DataMatrix::from_shape_vec(x.rows(), x.cols(), values)
}

/// `X / sigma_max(X)` together with `sigma_max(X)`.
pub fn scale_by_spectral_norm(x: &DataMatrix) -> Result<(DataMatrix, f64)> {
    let sigma = spectral_norm_seeded(x, 1000, 1e-13, 0)?;
    Ok((DataMatrix::new(x.as_array() / sigma)?, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn filter_examples() {
        let x = DataMatrix::new(array![[0.0, 3.0, 1.0], [0.0, 2.0, 5.0], [0.0, 0.0, 1.0]]).unwrap();
        let (_, kept) = filter_low_expressed(&x, 0.0, 3).unwrap();
        assert_eq!(kept, vec![0, 1, 2]);
        let (y, kept) = filter_low_expressed(&x, 2.0, 1).unwrap();
        assert_eq!(kept, vec![1, 2]);
        assert_eq!(y.as_array(), &array![[3.0, 1.0], [2.0, 5.0], [0.0, 1.0]]);
        let (_, kept) = filter_low_expressed(&x, 2.0, 2).unwrap();
        assert_eq!(kept, vec![1]);
        assert!(matches!(filter_low_expressed(&x, 10.0, 1), Err(Error::AllFeaturesRemoved)));
        assert!(filter_low_expressed(&x, 1.0, 4).is_err());
    }

    #[test]
    fn cpm_examples() {
        let x = DataMatrix::new(array![[1.0, 3.0], [5e5, 5e5]]).unwrap();
        let y = cpm_normalize(&x).unwrap();
        assert_eq!(y.as_array(), &array![[250000.0, 750000.0], [5e5, 5e5]]);
    }

    #[test]
    fn cpm_rows_sum_to_a_million() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((20, 15), |_| rng.random_range(0.0..50.0));
        let y = cpm_normalize(&DataMatrix::new(x).unwrap()).unwrap();
        for row in y.view().rows() {
            assert!((row.sum() - 1e6).abs() <= 1e-6 * 1e6);
        }
    }

    #[test]
    fn cpm_rejects_bad_rows() {
        let x = DataMatrix::new(array![[1.0, 3.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(cpm_normalize(&x), Err(Error::ZeroRowSum { sample }) if sample == "1"));
        let x = DataMatrix::new(array![[1.0, -3.0], [1.0, 0.0]]).unwrap();
        assert!(matches!(cpm_normalize(&x), Err(Error::NegativeCount { row: 0, col: 1, .. })));
    }

    #[test]
    fn spectral_scaling() {
        let eye = DataMatrix::new(Array2::eye(3)).unwrap();
        let (y, s) = scale_by_spectral_norm(&eye).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(y.as_array().iter().zip(Array2::<f64>::eye(3).iter()).all(|(a, b)| (a - b).abs() < 1e-12));
        let two = DataMatrix::new(Array2::eye(3) * 2.0).unwrap();
        let (y, s) = scale_by_spectral_norm(&two).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        assert!((y.as_array()[[1, 1]] - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((30, 12), |_| rng.random_range(-1.0..1.0));
        let (y, _) = scale_by_spectral_norm(&DataMatrix::new(x).unwrap()).unwrap();
        let again = spectral_norm_seeded(&y, 2000, 1e-14, 17).unwrap();
        assert!((again - 1.0).abs() < 1e-6);
    }
}
