//! Alternating minimization: inner weight solve, k-means on `X W`, centroid
//! update, repeated for a fixed number of outer loops.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::kmeans;
use crate::linalg;
use crate::metrics::Scores;
use crate::objective::{cluster_means, residual};
use crate::projection::ProjectionBudget;
use crate::solver::{solve_weights_fista, solve_weights_ista, Design, InnerParams};
use crate::types::{
    CentroidMatrix, ClusteringResult, DataMatrix, LabelAssignment, SolverConfig, WeightMatrix,
};

/// One point of an η sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub eta: f64,
    pub selected_count: usize,
    /// Final unsquared Frobenius residual.
    pub frobenius_objective: f64,
    pub accuracy: Option<f64>,
    pub ari: Option<f64>,
    pub nmi: Option<f64>,
}

/// Rows of `W` with Euclidean norm above `tol`, ascending.
pub fn selected_features(w: &WeightMatrix, tol: f64) -> Vec<usize> {
    w.view()
        .rows()
        .into_iter()
        .enumerate()
        .filter(|(_, row)| row.iter().map(|v| v * v).sum::<f64>().sqrt() > tol)
        .map(|(j, _)| j)
        .collect()
}

/// Column indices sorted by decreasing variance (ties by index), truncated
/// to `n`.
pub(crate) fn top_variance_columns(x: &DataMatrix, n: usize) -> Vec<usize> {
    let view = x.view();
    let mean = view.mean_axis(Axis(0)).expect("non-empty");
    let mut var = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for (j, (&v, &mu)) in x.row(i).iter().zip(mean.iter()).enumerate() {
            var[j] += (v - mu) * (v - mu);
        }
    }
    let mut order: Vec<usize> = (0..x.cols()).collect();
    order.sort_by(|&a, &b| var[b].total_cmp(&var[a]).then(a.cmp(&b)));
    order.truncate(n);
    order
}

/// `1/2 ||Y mu - Z||^2` with `mu` the cluster means of `z`.
fn within_cluster(z: ArrayView2<'_, f64>, labels: &LabelAssignment) -> Result<(f64, Array2<f64>)> {
    let mu = cluster_means(labels.labels(), labels.k(), z)?;
    let mut total = 0.0;
    for (i, &l) in labels.labels().iter().enumerate() {
        total += z.row(i).iter().zip(mu.row(l)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok((0.5 * total, mu))
}

fn check_inputs(x: &DataMatrix, k: usize, eta: f64, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    ProjectionBudget::new(eta)?;
    if k < 2 {
        return Err(Error::invalid("k", format!("must be at least 2, got {k}")));
    }
    if x.rows() < k {
        return Err(Error::invalid(
            "k",
            format!("exceeds the number of samples ({} > {})", k, x.rows()),
        ));
    }
    Ok(())
}

/// Divides `x` by its estimated spectral norm.
fn normalized(x: &DataMatrix, cfg: &SolverConfig) -> Result<DataMatrix> {
    let sigma = linalg::spectral_norm_seeded(x, cfg.power_iters, cfg.power_tol, 0)?;
    DataMatrix::new(x.as_array() / sigma)
}

/// Clusters the rows of `x` into `k` groups while selecting features through
/// an l1 budget `eta` on the `d x dbar` weight matrix.
///
/// Labels start from k-means on the `dbar` highest-variance columns, `W`
/// from the leading diagonal on the ball boundary, and the centroids from
/// those columns unweighted, so their scale does not depend on `eta`. Each loop runs the inner solver from the
/// current `W`, then keeps the best of a warm-started k-means, a fresh
/// best-of-replicates k-means and the previous labels, and recomputes the
/// centroids of `X W`.
pub fn k_sparse(x: &DataMatrix, k: usize, eta: f64, cfg: &SolverConfig) -> Result<ClusteringResult> {
    check_inputs(x, k, eta, cfg)?;
    let scaled;
    let (x, design) = if cfg.normalize {
        scaled = normalized(x, cfg)?;
        (&scaled, Design::with_sigma_max(&scaled, 1.0))
    } else {
        (x, Design::new(x, cfg.power_iters, cfg.power_tol, 0)?)
    };
    let (m, d) = (x.rows(), x.cols());
    let dbar = cfg.dbar_for(k);

    let top = top_variance_columns(x, dbar);
    let mut z0 = Array2::zeros((m, dbar));
    for i in 0..m {
        let xi = x.row(i);
        for (c, &j) in top.iter().enumerate() {
            z0[[i, c]] = xi[j];
        }
    }
    let init = kmeans::best_of_replicates(z0.view(), k, cfg.replicates, cfg.seed, cfg.kmeans_max_iter)?;
    let mut labels = init.labels;
    let mut mu = CentroidMatrix::new(cluster_means(labels.labels(), k, z0.view())?);
    let mut w = WeightMatrix::leading_diagonal(d, dbar, eta)?;

    let current = |w: &WeightMatrix, labels: &LabelAssignment, mu: &CentroidMatrix| {
        let r = residual(x, w.view().reversed_axes(), labels.labels(), mu.view());
        linalg::half_sq_norm(r.view())
    };
    let mut trace = vec![(2.0 * current(&w, &labels, &mu)).sqrt()];

    let params = InnerParams {
        projection: cfg.projection,
        early_exit: cfg.inner_early_exit,
        ..InnerParams::new(cfg.inner_iters, cfg.gamma, eta)
    };
    let tol = cfg.selection_tol_for(eta);
    let mut selection = selected_features(&w, tol);
    let mut unchanged = 0;

    for _ in 0..cfg.outer_loops {
        let report = if cfg.accelerated {
            solve_weights_fista(&design, &labels, &mu, &w, &params)?
        } else {
            solve_weights_ista(&design, &labels, &mu, &w, &params)?
        };
        // the accelerated solver is not monotone; never accept a worse W
        let first = report.objective_trace[0];
        let last = *report.objective_trace.last().expect("non-empty trace");
        if last <= first {
            w = report.final_weights;
        }

        let z = linalg::times_weights(x, w.view().reversed_axes());
        let warm = kmeans::lloyd_from_labels(z.view(), &labels, cfg.kmeans_max_iter)?;
        let fresh =
            kmeans::best_of_replicates(z.view(), k, cfg.replicates, cfg.seed, cfg.kmeans_max_iter)?;
        let mut best: Option<(f64, LabelAssignment, Array2<f64>)> = None;
        for candidate in [warm.labels, fresh.labels, labels] {
            let (value, centers) = within_cluster(z.view(), &candidate)?;
            if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
                best = Some((value, candidate, centers));
            }
        }
        let (value, chosen, centers) = best.expect("three candidates");
        labels = chosen;
        mu = CentroidMatrix::new(centers);
        trace.push((2.0 * value).sqrt());

        let next = selected_features(&w, tol);
        if next == selection {
            unchanged += 1;
        } else {
            unchanged = 0;
        }
        selection = next;
        if cfg.stop_on_stable_selection && unchanged >= 2 {
            break;
        }
    }

    Ok(ClusteringResult {
        labels,
        weights: w,
        selected_features: selection,
        objective_trace: trace,
        metrics: None,
    })
}

/// Runs [`k_sparse`] independently for every `eta` (same configuration and
/// seed), scoring against `truth` when given. Records follow the order of
/// `etas`.
pub fn sweep_eta(
    x: &DataMatrix,
    k: usize,
    etas: &[f64],
    truth: Option<&LabelAssignment>,
    cfg: &SolverConfig,
) -> Result<Vec<SweepRecord>> {
    if etas.is_empty() {
        return Err(Error::invalid("etas", "need at least one value"));
    }
    for &eta in etas {
        check_inputs(x, k, eta, cfg)?;
    }
    if let Some(t) = truth {
        if t.len() != x.rows() {
            return Err(Error::DimensionMismatch {
                axis: "true labels vs X rows (m)",
                expected: x.rows(),
                got: t.len(),
            });
        }
    }
    let scaled;
    let (x, cfg) = if cfg.normalize {
        scaled = normalized(x, cfg)?;
        (&scaled, SolverConfig { normalize: false, ..cfg.clone() })
    } else {
        (x, cfg.clone())
    };
    let run = |&eta: &f64| -> Result<SweepRecord> {
        let result = k_sparse(x, k, eta, &cfg)?;
        let scores = truth.map(|t| Scores::compute(t, &result.labels)).transpose()?;
        Ok(SweepRecord {
            eta,
            selected_count: result.selected_features.len(),
            frobenius_objective: *result.objective_trace.last().expect("non-empty trace"),
            accuracy: scores.map(|s| s.accuracy),
            ari: scores.map(|s| s.ari),
            nmi: scores.map(|s| s.nmi),
        })
    };
    #[cfg(feature = "parallel")]
    let records: Vec<Result<SweepRecord>> = {
        use rayon::prelude::*;
        etas.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let records: Vec<Result<SweepRecord>> = etas.iter().map(run).collect();
    records.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{generate_synthetic, SyntheticSpec};
    use crate::metrics::accuracy;
    use crate::projection::project_l1_ball_matrix;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn quick() -> SolverConfig {
        SolverConfig {
            inner_iters: 100,
            replicates: 5,
            ..SolverConfig::default()
        }
    }

    /// Two tight groups differing only on features 3 and 17 of 50.
    fn two_groups() -> (DataMatrix, LabelAssignment) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let m = 40;
        let labels: Vec<usize> = (0..m).map(|i| i % 2).collect();
        let x = Array2::from_shape_fn((m, 50), |(i, j)| {
            let base = if (j == 3 || j == 17) && labels[i] == 1 { 4.0 } else { 0.0 };
            base + noise.sample(&mut rng)
        });
        (DataMatrix::new(x).unwrap(), LabelAssignment::new(labels, 2).unwrap())
    }

    #[test]
    fn separated_groups_are_recovered_with_their_features() {
        let (x, truth) = two_groups();
        let r = k_sparse(&x, 2, 1.0, &quick()).unwrap();
        assert_eq!(accuracy(&truth, &r.labels).unwrap(), 1.0);
        assert!(r.selected_features.contains(&3) && r.selected_features.contains(&17));
        assert!(r.weights.l1_norm() <= 1.0 * (1.0 + crate::types::BUDGET_SLACK));
    }

    #[test]
    fn trace_is_monotone() {
        let (x, _) = two_groups();
        for eta in [0.1, 1.0, 10.0] {
            let r = k_sparse(&x, 2, eta, &quick()).unwrap();
            assert_eq!(r.objective_trace.len(), 11);
            for w in r.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}", r.objective_trace);
            }
        }
    }

    #[test]
    fn zero_loops_return_the_initialization() {
        let (x, _) = two_groups();
        let cfg = SolverConfig { outer_loops: 0, ..quick() };
        let r = k_sparse(&x, 2, 2.0, &cfg).unwrap();
        let xn = normalized(&x, &cfg).unwrap();
        let top = top_variance_columns(&xn, 6);
        let z0 = Array2::from_shape_fn((40, 6), |(i, c)| xn.row(i)[top[c]]);
        let init = kmeans::best_of_replicates(z0.view(), 2, 5, 0, 100).unwrap();
        assert_eq!(r.labels, init.labels);
        assert_eq!(r.weights, WeightMatrix::leading_diagonal(50, 6, 2.0).unwrap());
        assert_eq!(r.objective_trace.len(), 1);
    }

    #[test]
    fn invalid_inputs_fail_early() {
        let (x, _) = two_groups();
        assert!(k_sparse(&x, 1, 1.0, &quick()).is_err());
        assert!(k_sparse(&x, 2, 0.0, &quick()).is_err());
        assert!(k_sparse(&x, 41, 1.0, &quick()).is_err());
        let bad = SolverConfig { replicates: 0, ..quick() };
        assert!(k_sparse(&x, 2, 1.0, &bad).is_err());
        let bad = SolverConfig { gamma: 1.5, ..quick() };
        assert!(matches!(k_sparse(&x, 2, 1.0, &bad), Err(Error::StepSize { .. })));
    }

    #[test]
    fn reproducible() {
        let (x, _) = two_groups();
        assert_eq!(k_sparse(&x, 2, 0.7, &quick()).unwrap(), k_sparse(&x, 2, 0.7, &quick()).unwrap());
    }

    #[test]
    fn permuting_samples_permutes_labels() {
        let (x, _) = two_groups();
        let m = x.rows();
        let mut order: Vec<usize> = (0..m).collect();
        order.reverse();
        order.swap(0, 7);
        let xp = DataMatrix::new(Array2::from_shape_fn((m, x.cols()), |(i, j)| x.row(order[i])[j])).unwrap();
        let a = k_sparse(&x, 2, 1.0, &quick()).unwrap();
        let b = k_sparse(&xp, 2, 1.0, &quick()).unwrap();
        let permuted: Vec<usize> = order.iter().map(|&i| a.labels.labels()[i]).collect();
        let permuted = LabelAssignment::new(permuted, 2).unwrap();
        assert_eq!(accuracy(&permuted, &b.labels).unwrap(), 1.0);
        assert_eq!(a.selected_features, b.selected_features);
    }

    #[test]
    fn selection_examples() {
        let zero = WeightMatrix::new(Array2::zeros((4, 2)), 1.0).unwrap();
        assert!(selected_features(&zero, 0.0).is_empty());
        let w = WeightMatrix::new(array![[0.0, 0.0], [0.1, 0.0], [0.0, 0.0], [0.0, -0.2]], 1.0).unwrap();
        assert_eq!(selected_features(&w, 0.0), vec![1, 3]);
        assert_eq!(selected_features(&w, 0.15), vec![3]);
    }

    #[test]
    fn selection_matches_a_recount_after_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let w = Array2::from_shape_fn((30, 4), |_| rng.random_range(-1.0..1.0));
            let eta = rng.random_range(0.1..3.0);
            let p = project_l1_ball_matrix(&w, eta).unwrap();
            let recount = p.rows().into_iter().filter(|r| r.iter().any(|&v| v != 0.0)).count();
            let got = selected_features(&WeightMatrix::new(p, eta).unwrap(), 0.0);
            assert_eq!(got.len(), recount);
        }
    }

    fn small_synthetic() -> (DataMatrix, LabelAssignment) {
        let spec = SyntheticSpec {
            m: 60,
            d: 120,
            k: 3,
            n_informative: 8,
            ..SyntheticSpec::default()
        };
        let data = generate_synthetic(&spec).unwrap().dataset;
        (data.matrix, data.labels_true.unwrap())
    }

    #[test]
    fn sweep_singleton_matches_direct_call() {
        let (x, truth) = small_synthetic();
        let records = sweep_eta(&x, 3, &[1.5], Some(&truth), &quick()).unwrap();
        let direct = k_sparse(&x, 3, 1.5, &quick()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].selected_count, direct.selected_features.len());
        assert_eq!(records[0].frobenius_objective, *direct.objective_trace.last().unwrap());
        assert_eq!(records[0].accuracy, Some(accuracy(&truth, &direct.labels).unwrap()));
    }

    #[test]
    fn inactive_budget_selects_nearly_everything() {
        let (x, _) = small_synthetic();
        let (d, dbar) = (x.cols() as f64, 7.0);
        let records = sweep_eta(&x, 3, &[10.0 * d * dbar], None, &quick()).unwrap();
        assert!(records[0].selected_count as f64 >= 0.9 * d, "{records:?}");
        assert!(records[0].accuracy.is_none());
    }

    #[test]
    fn sweep_rejects_bad_budgets() {
        let (x, _) = small_synthetic();
        assert!(sweep_eta(&x, 3, &[], None, &quick()).is_err());
        assert!(sweep_eta(&x, 3, &[1.0, -1.0], None, &quick()).is_err());
    }
}
