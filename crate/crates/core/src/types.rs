//! Domain types shared by every stage of the pipeline.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::metrics::Scores;
use crate::projection::ProjectionMethod;

/// Samples-by-features data matrix `X` (row `i` is sample `i`).
///
/// Guaranteed finite, not identically zero, with at least two samples and one
/// feature. Storage is always standard (row-major) layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
}

impl DataMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (m, d) = values.dim();
        if m < 2 {
            return Err(Error::invalid("rows", format!("need at least 2 samples, got {m}")));
        }
        if d < 1 {
            return Err(Error::invalid("cols", "need at least 1 feature"));
        }
        let mut nonzero = false;
        for ((row, col), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            nonzero |= *v != 0.0;
        }
        if !nonzero {
            return Err(Error::ZeroMatrix);
        }
        let values = if values.is_standard_layout() {
            values
        } else {
            values.as_standard_layout().into_owned()
        };
        Ok(Self { values })
    }

    pub fn from_shape_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let got = data.len();
        let values = Array2::from_shape_vec((rows, cols), data).map_err(|_| {
            Error::DimensionMismatch {
                axis: "elements",
                expected: rows * cols,
                got,
            }
        })?;
        Self::new(values)
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }

    /// Row `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.cols();
        &self.values.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }
}

/// Hard cluster assignment, the index form of the one-hot label matrix `Y`.
///
/// Every sample has exactly one label in `0..k` and every cluster is used.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl LabelAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k", "must be at least 1"));
        }
        let mut sizes = vec![0usize; k];
        for (sample, &label) in labels.iter().enumerate() {
            if label >= k {
                return Err(Error::LabelOutOfRange { sample, label, k });
            }
            sizes[label] += 1;
        }
        if let Some(cluster) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::EmptyCluster { cluster });
        }
        Ok(Self { labels, k })
    }

    /// Builds an assignment from arbitrary integer codes, numbering the
    /// distinct codes `0..k` in ascending order.
    pub fn from_codes(codes: &[i64]) -> Result<Self> {
        let mut distinct: Vec<i64> = codes.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let labels = codes
            .iter()
            .map(|c| distinct.binary_search(c).expect("code present"))
            .collect();
        Self::new(labels, distinct.len().max(1))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Dense `m x k` indicator matrix.
    pub fn one_hot(&self) -> Array2<f64> {
        let mut y = Array2::zeros((self.labels.len(), self.k));
        for (i, &l) in self.labels.iter().enumerate() {
            y[[i, l]] = 1.0;
        }
        y
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }
}

/// Projection weights `W` (`d x dbar`) together with their l1 budget.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    values: Array2<f64>,
    eta: f64,
}

/// Relative slack allowed on the l1 budget after floating-point projection.
pub const BUDGET_SLACK: f64 = 1e-12;

impl WeightMatrix {
    /// Wraps `values`, checking finiteness and `||W||_1 <= eta (1 + 1e-12)`.
    pub fn new(values: Array2<f64>, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        for ((row, col), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
        let l1: f64 = values.iter().map(|v| v.abs()).sum();
        if l1 > eta * (1.0 + BUDGET_SLACK) {
            return Err(Error::invalid(
                "weights",
                format!("l1 norm {l1} exceeds budget {eta}"),
            ));
        }
        Ok(Self { values, eta })
    }

    /// Projects `values` onto the l1 ball of radius `eta` and wraps the result.
    pub fn projected(values: Array2<f64>, eta: f64) -> Result<Self> {
        let values = crate::projection::project_l1_ball_matrix(&values, eta)?;
        Ok(Self { values, eta })
    }

    pub(crate) fn from_parts_unchecked(values: Array2<f64>, eta: f64) -> Self {
        Self { values, eta }
    }

    /// The deterministic starting point: `min(d, dbar)` leading diagonal
    /// entries, each `eta / min(d, dbar)`, so the matrix sits on the ball
    /// boundary.
    pub fn leading_diagonal(d: usize, dbar: usize, eta: f64) -> Result<Self> {
        Self::on_rows(d, dbar, &(0..d.min(dbar)).collect::<Vec<_>>(), eta)
    }

    /// Like [`leading_diagonal`](Self::leading_diagonal) but placing entry
    /// `r` at row `rows[r]`, column `r`.
    pub fn on_rows(d: usize, dbar: usize, rows: &[usize], eta: f64) -> Result<Self> {
        check_eta(eta)?;
        if d == 0 || dbar == 0 {
            return Err(Error::invalid("weights", "shape must be non-empty"));
        }
        let n = rows.len().min(dbar);
        let mut values = Array2::zeros((d, dbar));
        if n > 0 {
            let v = eta / n as f64;
            for (c, &r) in rows.iter().take(n).enumerate() {
                if r >= d {
                    return Err(Error::DimensionMismatch {
                        axis: "weight row",
                        expected: d,
                        got: r,
                    });
                }
                values[[r, c]] = v;
            }
        }
        Ok(Self { values, eta })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// `d`, the number of input features.
    pub fn features(&self) -> usize {
        self.values.nrows()
    }

    /// `dbar`, the projected dimension.
    pub fn dbar(&self) -> usize {
        self.values.ncols()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::invalid("eta", format!("must be positive and finite, got {eta}")));
    }
    Ok(())
}

/// Cluster centroids `mu` in the projected space (`k x dbar`).
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidMatrix {
    values: Array2<f64>,
}

impl CentroidMatrix {
    pub fn new(values: Array2<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn k(&self) -> usize {
        self.values.nrows()
    }

    pub fn dbar(&self) -> usize {
        self.values.ncols()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }
}

/// Tunables for one alternating-minimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Constant gradient step. Must lie in `(0, 1/sigma_max^2]` for the
    /// accelerated inner solver; on unit-spectral-norm data the default 1 is
    /// the largest admissible value.
    pub gamma: f64,
    /// Inner projected-gradient iterations per outer loop.
    pub inner_iters: usize,
    /// Outer alternating loops.
    pub outer_loops: usize,
    /// Projected dimension; `None` means `k + 4`.
    pub dbar: Option<usize>,
    /// k-means++ replicates per clustering step.
    pub replicates: usize,
    pub seed: u64,
    /// Row-norm threshold for feature selection; `None` means `1e-10 * eta`.
    pub selection_tol: Option<f64>,
    pub power_iters: usize,
    pub power_tol: f64,
    /// Lloyd iteration cap.
    pub kmeans_max_iter: usize,
    /// Divide `X` by its spectral norm before solving.
    pub normalize: bool,
    /// Use the accelerated inner solver (the default) instead of plain
    /// projected gradient.
    pub accelerated: bool,
    pub projection: ProjectionMethod,
    /// Stop an inner solve once successive objective values differ by less
    /// than `1e-10 * max(1, initial objective)`.
    pub inner_early_exit: bool,
    /// Stop the outer loop once the selected feature set has been unchanged
    /// for two consecutive loops.
    pub stop_on_stable_selection: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            inner_iters: 300,
            outer_loops: 10,
            dbar: None,
            replicates: 40,
            seed: 0,
            selection_tol: None,
            power_iters: 200,
            power_tol: 1e-8,
            kmeans_max_iter: 100,
            normalize: true,
            accelerated: true,
            projection: ProjectionMethod::Sort,
            inner_early_exit: false,
            stop_on_stable_selection: false,
        }
    }
}

impl SolverConfig {
    pub fn dbar_for(&self, k: usize) -> usize {
        self.dbar.unwrap_or(k + 4)
    }

    pub fn selection_tol_for(&self, eta: f64) -> f64 {
        self.selection_tol.unwrap_or(1e-10 * eta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::invalid("gamma", format!("must be positive, got {}", self.gamma)));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates", "must be at least 1"));
        }
        if self.dbar == Some(0) {
            return Err(Error::invalid("dbar", "must be at least 1"));
        }
        if let Some(tol) = self.selection_tol {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Error::invalid("selection_tol", "must be nonnegative"));
            }
        }
        if self.power_iters == 0 {
            return Err(Error::invalid("power_iters", "must be at least 1"));
        }
        if !(self.power_tol.is_finite() && self.power_tol > 0.0) {
            return Err(Error::invalid("power_tol", "must be positive"));
        }
        if self.kmeans_max_iter == 0 {
            return Err(Error::invalid("kmeans_max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

/// Output of the alternating minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub labels: LabelAssignment,
    pub weights: WeightMatrix,
    /// Features whose weight row has norm above the selection tolerance,
    /// ascending.
    pub selected_features: Vec<usize>,
    /// Unsquared Frobenius residual `||Y mu - X W||_F`; entry 0 is the
    /// initialization, then one entry per completed outer loop.
    pub objective_trace: Vec<f64>,
    pub metrics: Option<Scores>,
}
