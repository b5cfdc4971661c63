use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::types::{DataMatrix, LabelAssignment};

use super::Dataset;

/// Shifted-Gaussian clusters: on the informative features, samples of
/// cluster `c` have mean `c * shift`; every other feature has mean zero. All
/// entries carry Gaussian noise of standard deviation `noise_sd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub m: usize,
    pub d: usize,
    pub k: usize,
    pub n_informative: usize,
    pub shift: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            m: 600,
            d: 5000,
            k: 4,
            n_informative: 100,
            shift: 2.0,
            noise_sd: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid("k", "must be at least 2"));
        }
        if self.k > self.m {
            return Err(Error::invalid("k", format!("exceeds m = {}", self.m)));
        }
        if self.d == 0 {
            return Err(Error::invalid("d", "must be at least 1"));
        }
        if self.n_informative == 0 || self.n_informative > self.d {
            return Err(Error::invalid(
                "n_informative",
                format!("must lie in 1..={}, got {}", self.d, self.n_informative),
            ));
        }
        if !(self.shift.is_finite() && self.shift > 0.0) {
            return Err(Error::invalid("shift", "must be positive"));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::invalid("noise_sd", "must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// Informative feature indices, ascending.
    pub informative: Vec<usize>,
}

/// Draws a dataset. Sample `i` belongs to cluster `i * k / m`, so cluster
/// sizes differ by at most one; informative features are a seeded random
/// subset of the columns.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let SyntheticSpec { m, d, k, .. } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut informative = rand::seq::index::sample(&mut rng, d, spec.n_informative).into_vec();
    informative.sort_unstable();
    let mut is_informative = vec![false; d];
    for &j in &informative {
        is_informative[j] = true;
    }

    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::invalid("noise_sd", e.to_string()))?;
    let labels: Vec<usize> = (0..m).map(|i| i * k / m).collect();
    let mut values = Vec::with_capacity(m * d);
    for &c in &labels {
        let mean = c as f64 * spec.shift;
        for &inf in &is_informative {
            let base = if inf { mean } else { 0.0 };
            values.push(base + noise.sample(&mut rng));
        }
    }
    let matrix = DataMatrix::from_shape_vec(m, d, values)?;
    let labels = LabelAssignment::new(labels, k)?;
    Ok(SyntheticData {
        dataset: Dataset::new(matrix, None, None, Some(labels))?,
        informative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            m: 30,
            d: 40,
            k: 3,
            n_informative: 5,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn default_shape_and_balance() {
        let data = generate_synthetic(&SyntheticSpec::default()).unwrap();
        let ds = &data.dataset;
        assert_eq!((ds.matrix.rows(), ds.matrix.cols()), (600, 5000));
        assert_eq!(ds.labels_true.as_ref().unwrap().cluster_sizes(), vec![150; 4]);
        assert_eq!(data.informative.len(), 100);
    }

    #[test]
    fn uneven_sizes_differ_by_at_most_one() {
        let spec = SyntheticSpec { m: 31, ..small() };
        let sizes = generate_synthetic(&spec).unwrap().dataset.labels_true.unwrap().cluster_sizes();
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        assert!(hi - lo <= 1);
    }

    #[test]
    fn noiseless_clusters_are_constant_on_informative_features() {
        let spec = SyntheticSpec { noise_sd: 0.0, ..small() };
        let data = generate_synthetic(&spec).unwrap();
        let labels = data.dataset.labels_true.as_ref().unwrap().labels().to_vec();
        for i in 0..spec.m {
            for &j in &data.informative {
                assert_eq!(data.dataset.matrix.row(i)[j], labels[i] as f64 * spec.shift);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(&small()).unwrap();
        let b = generate_synthetic(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&SyntheticSpec { seed: 1, ..small() }).unwrap();
        assert_ne!(a.dataset.matrix, c.dataset.matrix);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate_synthetic(&SyntheticSpec { n_informative: 41, ..small() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { k: 31, m: 30, ..small() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { shift: 0.0, ..small() }).is_err());
    }
}
