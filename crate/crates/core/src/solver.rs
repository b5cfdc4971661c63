//! Inner minimization over `W` for fixed labels and centroids: projected
//! gradient on the l1 ball, plain and accelerated.

use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::gather_centroids;
use crate::projection::{project_l1_ball_in_place, ProjectionBudget, ProjectionMethod};
use crate::types::{CentroidMatrix, DataMatrix, LabelAssignment, WeightMatrix};

/// Data matrix paired with its spectral norm, which fixes the admissible
/// step sizes.
#[derive(Debug, Clone, Copy)]
pub struct Design<'a> {
    x: &'a DataMatrix,
    sigma_max: f64,
}

/// Relative slack on the closed step-size bound, absorbing the
/// power-iteration error on `sigma_max`.
const STEP_SLACK: f64 = 1e-6;

impl<'a> Design<'a> {
    pub fn new(x: &'a DataMatrix, power_iters: usize, power_tol: f64, seed: u64) -> Result<Self> {
        let sigma_max = linalg::spectral_norm_seeded(x, power_iters, power_tol, seed)?;
        Ok(Self { x, sigma_max })
    }

    pub fn with_sigma_max(x: &'a DataMatrix, sigma_max: f64) -> Self {
        Self { x, sigma_max }
    }

    pub fn x(&self) -> &'a DataMatrix {
        self.x
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Lipschitz constant of the gradient, `sigma_max^2`.
    pub fn lipschitz(&self) -> f64 {
        self.sigma_max * self.sigma_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerParams {
    pub iters: usize,
    pub gamma: f64,
    pub eta: f64,
    pub projection: ProjectionMethod,
    /// Stop once `|phi_n - phi_{n-1}| < 1e-10 * max(1, phi_0)`.
    pub early_exit: bool,
}

impl InnerParams {
    pub fn new(iters: usize, gamma: f64, eta: f64) -> Self {
        Self {
            iters,
            gamma,
            eta,
            projection: ProjectionMethod::Sort,
            early_exit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolveReport {
    pub final_weights: WeightMatrix,
    /// `1/2 ||Y mu - X W_n||_F^2` for the starting point and every projected
    /// iterate, so `iterations_run + 1` entries.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
}

/// Momentum schedule `(t_{n+1}, lambda_n)` of the accelerated solver given
/// `t_n`: `t_{n+1} = (n + 5) / 4`, `lambda_n = 1 + (t_n - 1) / t_{n+1}`.
pub fn momentum_step(n: usize, t: f64) -> (f64, f64) {
    let t_new = (n as f64 + 5.0) / 4.0;
    (t_new, 1.0 + (t - 1.0) / t_new)
}

/// Shared per-solve state: the data, the fixed target `Y mu` and the budget.
struct Problem<'a> {
    x: &'a DataMatrix,
    target: Array2<f64>,
    eta: f64,
    dbar: usize,
    params: InnerParams,
}

impl<'a> Problem<'a> {
    fn new(
        design: &Design<'a>,
        labels: &LabelAssignment,
        mu: &CentroidMatrix,
        w0: &WeightMatrix,
        params: &InnerParams,
        max_gamma: f64,
        closed: bool,
    ) -> Result<Self> {
        let x = design.x;
        let eta = ProjectionBudget::new(params.eta)?.get();
        if labels.len() != x.rows() {
            return Err(Error::DimensionMismatch {
                axis: "labels vs X rows (m)",
                expected: x.rows(),
                got: labels.len(),
            });
        }
        if w0.features() != x.cols() {
            return Err(Error::DimensionMismatch {
                axis: "W rows vs X columns (d)",
                expected: x.cols(),
                got: w0.features(),
            });
        }
        if mu.dbar() != w0.dbar() || mu.k() != labels.k() {
            return Err(Error::DimensionMismatch {
                axis: "mu shape vs (k, dbar)",
                expected: labels.k() * w0.dbar(),
                got: mu.k() * mu.dbar(),
            });
        }
        let bound = max_gamma / design.lipschitz();
        let gamma = params.gamma;
        let within = if closed {
            gamma <= bound * (1.0 + STEP_SLACK)
        } else {
            gamma < bound
        };
        if !(gamma > 0.0 && within) {
            return Err(Error::StepSize {
                gamma,
                bound,
                sigma_max: design.sigma_max,
            });
        }
        Ok(Self {
            x,
            target: gather_centroids(labels.labels(), mu.view()),
            eta,
            dbar: w0.dbar(),
            params: *params,
        })
    }

    /// `W0^T`, projected onto the ball.
    fn start(&self, w0: &WeightMatrix) -> Array2<f64> {
        let mut wt = w0.view().reversed_axes().as_standard_layout().into_owned();
        project_l1_ball_in_place(
            wt.as_slice_mut().expect("standard layout"),
            self.eta,
            self.params.projection,
        );
        wt
    }

    /// `X W - Y mu` given `X W`.
    fn residual(&self, xw: &Array2<f64>) -> Array2<f64> {
        xw - &self.target
    }

    /// `P(W - gamma * grad)` with the gradient evaluated from residual `r`.
    fn forward_backward(&self, wt: ArrayView2<'_, f64>, r: &Array2<f64>) -> Array2<f64> {
        let grad = linalg::transpose_times(self.x, r.view());
        let gamma = self.params.gamma;
        let mut next = Array2::zeros(wt.raw_dim());
        Zip::from(&mut next)
            .and(wt)
            .and(&grad)
            .for_each(|n, &w, &g| *n = w - gamma * g);
        project_l1_ball_in_place(
            next.as_slice_mut().expect("standard layout"),
            self.eta,
            self.params.projection,
        );
        next
    }

    fn stalled(&self, trace: &[f64]) -> bool {
        if !self.params.early_exit || trace.len() < 2 {
            return false;
        }
        let n = trace.len();
        (trace[n - 1] - trace[n - 2]).abs() < 1e-10 * trace[0].max(1.0)
    }

    fn finish(&self, wt: Array2<f64>, trace: Vec<f64>) -> InnerSolveReport {
        let iterations_run = trace.len() - 1;
        let values = wt.reversed_axes().as_standard_layout().into_owned();
        debug_assert_eq!(values.ncols(), self.dbar);
        InnerSolveReport {
            final_weights: WeightMatrix::from_parts_unchecked(values, self.eta),
            objective_trace: trace,
            iterations_run,
        }
    }
}

/// Projected gradient: `W <- P(W - gamma X^T (X W - Y mu))`, `params.iters`
/// times. Requires `gamma` in `(0, 2 / sigma_max^2)`.
pub fn solve_weights_ista(
    design: &Design<'_>,
    labels: &LabelAssignment,
    mu: &CentroidMatrix,
    w0: &WeightMatrix,
    params: &InnerParams,
) -> Result<InnerSolveReport> {
    let problem = Problem::new(design, labels, mu, w0, params, 2.0, false)?;
    let mut wt = problem.start(w0);
    let mut r = problem.residual(&linalg::times_weights(problem.x, wt.view()));
    let mut trace = vec![linalg::half_sq_norm(r.view())];
    for _ in 0..params.iters {
        wt = problem.forward_backward(wt.view(), &r);
        r = problem.residual(&linalg::times_weights(problem.x, wt.view()));
        trace.push(linalg::half_sq_norm(r.view()));
        if problem.stalled(&trace) {
            break;
        }
    }
    Ok(problem.finish(wt, trace))
}

/// Accelerated projected gradient with the `(n + 5) / 4` momentum schedule.
/// Requires `gamma` in `(0, 1 / sigma_max^2]`.
///
/// The extrapolated point may leave the ball; the returned weights are the
/// last projected iterate.
pub fn solve_weights_fista(
    design: &Design<'_>,
    labels: &LabelAssignment,
    mu: &CentroidMatrix,
    w0: &WeightMatrix,
    params: &InnerParams,
) -> Result<InnerSolveReport> {
    let problem = Problem::new(design, labels, mu, w0, params, 1.0, true)?;
    let mut w_prev = problem.start(w0);
    let mut xw_prev = linalg::times_weights(problem.x, w_prev.view());
    let mut trace = vec![linalg::half_sq_norm(problem.residual(&xw_prev).view())];

    // extrapolated point and its image X y, which is the same affine
    // combination of the images of the projected iterates
    let mut y = w_prev.clone();
    let mut xy = xw_prev.clone();
    let mut t = 1.0;
    for n in 0..params.iters {
        let r = problem.residual(&xy);
        let w_new = problem.forward_backward(y.view(), &r);
        let xw_new = linalg::times_weights(problem.x, w_new.view());
        trace.push(linalg::half_sq_norm(problem.residual(&xw_new).view()));

        let (t_new, lambda) = momentum_step(n, t);
        y = &w_prev * (1.0 - lambda) + &w_new * lambda;
        xy = &xw_prev * (1.0 - lambda) + &xw_new * lambda;
        w_prev = w_new;
        xw_prev = xw_new;
        t = t_new;
        if problem.stalled(&trace) {
            break;
        }
    }
    Ok(problem.finish(w_prev, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::objective;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn momentum_schedule_values() {
        let (t1, l0) = momentum_step(0, 1.0);
        assert_eq!(t1, 1.25);
        assert_eq!(l0, 1.0);
        let (t2, l1) = momentum_step(1, t1);
        assert_eq!(t2, 1.5);
        assert!((l1 - 1.1667).abs() < 5e-5);
    }

    fn scalar_problem() -> (DataMatrix, LabelAssignment, CentroidMatrix) {
        // second sample has X = 0 and target 0, so it adds nothing
        let x = DataMatrix::new(array![[1.0], [0.0]]).unwrap();
        let labels = LabelAssignment::new(vec![0, 1], 2).unwrap();
        let mu = CentroidMatrix::new(array![[3.0], [0.0]]);
        (x, labels, mu)
    }

    #[test]
    fn scalar_clips_to_interval_endpoint() {
        let (x, labels, mu) = scalar_problem();
        let design = Design::with_sigma_max(&x, 1.0);
        let w0 = WeightMatrix::new(array![[0.0]], 1.0).unwrap();
        let params = InnerParams::new(20, 1.0, 1.0);
        for report in [
            solve_weights_ista(&design, &labels, &mu, &w0, &params).unwrap(),
            solve_weights_fista(&design, &labels, &mu, &w0, &params).unwrap(),
        ] {
            assert_eq!(report.final_weights.values(), &array![[1.0]]);
            assert_eq!(report.iterations_run, 20);
            assert_eq!(report.objective_trace.len(), 21);
        }
    }

    #[test]
    fn fixed_point_stays_put() {
        let (x, labels, mu) = scalar_problem();
        let design = Design::with_sigma_max(&x, 1.0);
        let w0 = WeightMatrix::new(array![[1.0]], 1.0).unwrap();
        let params = InnerParams::new(10, 1.0, 1.0);
        for report in [
            solve_weights_ista(&design, &labels, &mu, &w0, &params).unwrap(),
            solve_weights_fista(&design, &labels, &mu, &w0, &params).unwrap(),
        ] {
            assert_eq!(report.final_weights, w0);
            assert!(report.objective_trace.iter().all(|&v| v == 2.0));
        }
    }

    #[test]
    fn zero_iterations_return_projected_start() {
        let (x, labels, mu) = scalar_problem();
        let design = Design::with_sigma_max(&x, 1.0);
        let w0 = WeightMatrix::new(array![[4.0]], 10.0).unwrap();
        let report =
            solve_weights_ista(&design, &labels, &mu, &w0, &InnerParams::new(0, 1.0, 2.0)).unwrap();
        assert_eq!(report.final_weights.values(), &array![[2.0]]);
        assert_eq!(report.iterations_run, 0);
    }

    #[test]
    fn step_size_bounds_are_enforced() {
        let (x, labels, mu) = scalar_problem();
        let design = Design::with_sigma_max(&x, 1.0);
        let w0 = WeightMatrix::new(array![[0.0]], 1.0).unwrap();
        let too_big = InnerParams::new(5, 1.5, 1.0);
        assert!(solve_weights_ista(&design, &labels, &mu, &w0, &too_big).is_ok());
        assert!(matches!(
            solve_weights_fista(&design, &labels, &mu, &w0, &too_big),
            Err(Error::StepSize { .. })
        ));
        let way_too_big = InnerParams::new(5, 2.0, 1.0);
        assert!(matches!(
            solve_weights_ista(&design, &labels, &mu, &w0, &way_too_big),
            Err(Error::StepSize { .. })
        ));
        assert!(solve_weights_ista(&design, &labels, &mu, &w0, &InnerParams::new(5, 0.0, 1.0)).is_err());
    }

    fn random_instance(seed: u64, m: usize, d: usize, dbar: usize, k: usize) -> (DataMatrix, LabelAssignment, CentroidMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..m * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let raw = DataMatrix::from_shape_vec(m, d, data).unwrap();
        let s = linalg::spectral_norm_seeded(&raw, 500, 1e-12, 0).unwrap();
        let x = DataMatrix::new(raw.as_array() / s).unwrap();
        let labels = LabelAssignment::new((0..m).map(|i| i % k).collect(), k).unwrap();
        let mu = CentroidMatrix::new(Array2::from_shape_fn((k, dbar), |_| rng.random_range(-0.5..0.5)));
        (x, labels, mu)
    }

    #[test]
    fn inactive_budget_reaches_least_squares_optimum() {
        let (x, labels, mu) = random_instance(17, 20, 10, 3, 2);
        let design = Design::new(&x, 500, 1e-12, 0).unwrap();
        // least-squares oracle via the normal equations X^T X W = X^T Y mu
        let xa = nalgebra::DMatrix::from_row_slice(20, 10, x.as_array().as_slice().unwrap());
        let target = gather_centroids(labels.labels(), mu.view());
        let ta = nalgebra::DMatrix::from_row_slice(20, 3, target.as_slice().unwrap());
        let gram = xa.transpose() * &xa;
        let w_ls = gram.cholesky().unwrap().solve(&(xa.transpose() * &ta));
        let resid = &xa * &w_ls - &ta;
        let optimum = 0.5 * resid.norm_squared();
        let eta = 10.0 * w_ls.iter().map(|v| v.abs()).sum::<f64>();

        let w0 = WeightMatrix::leading_diagonal(10, 3, eta).unwrap();
        let params = InnerParams::new(20000, 1.0, eta);
        let report = solve_weights_ista(&design, &labels, &mu, &w0, &params).unwrap();
        let last = *report.objective_trace.last().unwrap();
        assert!((last - optimum).abs() < 1e-8, "{last} vs {optimum}");
    }

    #[test]
    fn ista_trace_non_increasing_and_feasible() {
        let (x, labels, mu) = random_instance(23, 20, 10, 3, 2);
        let design = Design::new(&x, 500, 1e-12, 0).unwrap();
        let w0 = WeightMatrix::leading_diagonal(10, 3, 0.5).unwrap();
        let report =
            solve_weights_ista(&design, &labels, &mu, &w0, &InnerParams::new(300, 1.0, 0.5)).unwrap();
        for pair in report.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
        assert!(report.final_weights.l1_norm() <= 0.5 * (1.0 + 1e-12));
        let direct = objective(&x, &report.final_weights, &labels, &mu).unwrap();
        assert!((direct - report.objective_trace[300]).abs() < 1e-14);
    }

    #[test]
    fn fista_catches_up_with_long_ista() {
        let (x, labels, mu) = random_instance(31, 20, 10, 3, 2);
        let design = Design::new(&x, 500, 1e-12, 0).unwrap();
        let w0 = WeightMatrix::leading_diagonal(10, 3, 0.4).unwrap();
        let ista = solve_weights_ista(&design, &labels, &mu, &w0, &InnerParams::new(2000, 1.0, 0.4)).unwrap();
        let fista = solve_weights_fista(&design, &labels, &mu, &w0, &InnerParams::new(200, 1.0, 0.4)).unwrap();
        let a = *ista.objective_trace.last().unwrap();
        let b = *fista.objective_trace.last().unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        assert!(fista.final_weights.l1_norm() <= 0.4 * (1.0 + 1e-12));
    }

    #[test]
    fn early_exit_stops_before_budget() {
        let (x, labels, mu) = random_instance(5, 20, 10, 3, 2);
        let design = Design::new(&x, 500, 1e-12, 0).unwrap();
        let w0 = WeightMatrix::leading_diagonal(10, 3, 0.4).unwrap();
        let mut params = InnerParams::new(100000, 1.0, 0.4);
        params.early_exit = true;
        let report = solve_weights_ista(&design, &labels, &mu, &w0, &params).unwrap();
        assert!(report.iterations_run < 100000);
    }

    #[test]
    fn identical_inputs_identical_traces() {
        let (x, labels, mu) = random_instance(2, 20, 10, 3, 2);
        let design = Design::new(&x, 500, 1e-12, 0).unwrap();
        let w0 = WeightMatrix::leading_diagonal(10, 3, 0.7).unwrap();
        let p = InnerParams::new(50, 1.0, 0.7);
        let a = solve_weights_fista(&design, &labels, &mu, &w0, &p).unwrap();
        let b = solve_weights_fista(&design, &labels, &mu, &w0, &p).unwrap();
        assert_eq!(a, b);
    }
}
