//! Reading and writing matrices, labels and results; count preprocessing;
//! the synthetic generator.

mod labels;
mod matrix;
mod preprocess;
mod result;
mod sweep;
mod synthetic;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{DataMatrix, LabelAssignment};

pub use labels::{load_labels, write_labels};
pub use matrix::{load_matrix_csv, load_matrix_csv_with, write_matrix_csv, CsvOptions};
pub use preprocess::{cpm_normalize, filter_low_expressed, scale_by_spectral_norm};
pub use result::{read_result, render_result, write_result, ResultDocument};
pub use sweep::{read_sweep_table, render_sweep_table, write_sweep_table};
pub use synthetic::{generate_synthetic, SyntheticData, SyntheticSpec};

/// A matrix with its row and column names and, optionally, reference labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub matrix: DataMatrix,
    pub feature_names: Vec<String>,
    pub sample_ids: Vec<String>,
    pub labels_true: Option<LabelAssignment>,
}

impl Dataset {
    /// Names default to `gene_<j>` and `cell_<i>` when not given.
    pub fn new(
        matrix: DataMatrix,
        feature_names: Option<Vec<String>>,
        sample_ids: Option<Vec<String>>,
        labels_true: Option<LabelAssignment>,
    ) -> Result<Self> {
        let feature_names =
            feature_names.unwrap_or_else(|| (0..matrix.cols()).map(|j| format!("gene_{j}")).collect());
        let sample_ids =
            sample_ids.unwrap_or_else(|| (0..matrix.rows()).map(|i| format!("cell_{i}")).collect());
        if feature_names.len() != matrix.cols() {
            return Err(Error::DimensionMismatch {
                axis: "feature names vs X columns (d)",
                expected: matrix.cols(),
                got: feature_names.len(),
            });
        }
        if sample_ids.len() != matrix.rows() {
            return Err(Error::DimensionMismatch {
                axis: "sample ids vs X rows (m)",
                expected: matrix.rows(),
                got: sample_ids.len(),
            });
        }
        if let Some(l) = &labels_true {
            if l.len() != matrix.rows() {
                return Err(Error::DimensionMismatch {
                    axis: "labels vs X rows (m)",
                    expected: matrix.rows(),
                    got: l.len(),
                });
            }
        }
        Ok(Self {
            matrix,
            feature_names,
            sample_ids,
            labels_true,
        })
    }

    /// Drops features expressed (`>= min_count`) in fewer than `min_cells`
    /// samples.
    pub fn filter_low_expressed(self, min_count: f64, min_cells: usize) -> Result<Self> {
        let (matrix, kept) = filter_low_expressed(&self.matrix, min_count, min_cells)?;
        let feature_names = kept.iter().map(|&j| self.feature_names[j].clone()).collect();
        Ok(Self {
            matrix,
            feature_names,
            ..self
        })
    }

    /// Counts per million; a zero-count sample is reported by its id.
    pub fn cpm_normalize(self) -> Result<Self> {
        let matrix = cpm_normalize(&self.matrix).map_err(|e| match e {
            Error::ZeroRowSum { sample } => Error::ZeroRowSum {
                sample: sample
                    .parse::<usize>()
                    .ok()
                    .and_then(|i| self.sample_ids.get(i).cloned())
                    .unwrap_or(sample),
            },
            other => other,
        })?;
        Ok(Self { matrix, ..self })
    }

    /// Divides by the spectral norm, returning it alongside.
    pub fn scale_by_spectral_norm(self) -> Result<(Self, f64)> {
        let (matrix, sigma) = scale_by_spectral_norm(&self.matrix)?;
        Ok((Self { matrix, ..self }, sigma))
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so a failed write never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Seventeen significant digits, enough to read back the same `f64`.
pub(crate) fn exact(v: f64) -> String {
    format!("{:.16e}", v)
}
