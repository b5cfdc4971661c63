//! Exact Euclidean projection onto the simplex `{w >= 0, sum w = eta}` and onto
//! the l1 ball `{w : sum |w| <= eta}`.
//!
//! Both reduce to finding the threshold `tau` with `sum max(v_i - tau, 0) = eta`;
//! the output is `max(v_i - tau, 0)` (entries exactly at the threshold become
//! zero). Two threshold searches are provided: a sort over the candidate
//! breakpoints, and Condat's linear-expected-time scan. Once either has found
//! the support, `tau` is recomputed from that support in index order, so the
//! two agree bitwise whenever they agree on the support.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Threshold search used by the projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionMethod {
    /// Sort the candidate entries, then scan the breakpoints. `O(n log n)`.
    #[default]
    Sort,
    /// Condat's scan with on-line pruning. Linear expected time.
    Scan,
}

/// Radius of the l1 ball; always positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ProjectionBudget(f64);

impl ProjectionBudget {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::invalid("eta", format!("must be positive and finite, got {eta}")));
        }
        Ok(Self(eta))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Inputs whose l1 norm is within this relative margin of the radius count as
/// inside the ball, so that projecting a projection returns it unchanged.
const INSIDE_SLACK: f64 = 1e-13;

/// Projection of `v` onto `{w >= 0, sum w = eta}`.
pub fn project_simplex(v: &[f64], eta: f64) -> Result<Vec<f64>> {
    project_simplex_with(v, eta, ProjectionMethod::Sort)
}

pub fn project_simplex_with(v: &[f64], eta: f64, method: ProjectionMethod) -> Result<Vec<f64>> {
    let eta = ProjectionBudget::new(eta)?.get();
    check_finite(v)?;
    if v.is_empty() {
        return Err(Error::invalid("v", "cannot project an empty vector onto the simplex"));
    }
    let tau = simplex_threshold(v, eta, method);
    Ok(v.iter().map(|&x| if x > tau { x - tau } else { 0.0 }).collect())
}

/// Projection of `w` onto the l1 ball of radius `eta`.
pub fn project_l1_ball(w: &[f64], eta: f64) -> Result<Vec<f64>> {
    project_l1_ball_with(w, eta, ProjectionMethod::Sort)
}

pub fn project_l1_ball_with(w: &[f64], eta: f64, method: ProjectionMethod) -> Result<Vec<f64>> {
    let eta = ProjectionBudget::new(eta)?.get();
    check_finite(w)?;
    let mut out = w.to_vec();
    project_l1_ball_in_place(&mut out, eta, method);
    Ok(out)
}

/// Projection of a matrix viewed as one long vector (column-major order).
pub fn project_l1_ball_matrix(w: &Array2<f64>, eta: f64) -> Result<Array2<f64>> {
    let eta = ProjectionBudget::new(eta)?.get();
    // column-major vectorization == row-major order of the transpose
    let mut t = w.t().as_standard_layout().into_owned();
    let flat = t.as_slice_mut().expect("standard layout");
    check_finite(flat)?;
    project_l1_ball_in_place(flat, eta, ProjectionMethod::Sort);
    Ok(t.reversed_axes().as_standard_layout().into_owned())
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(col) => Err(Error::NonFinite { row: 0, col }),
        None => Ok(()),
    }
}

/// In-place l1-ball projection; `eta` must already be validated.
pub(crate) fn project_l1_ball_in_place(w: &mut [f64], eta: f64, method: ProjectionMethod) {
    let l1: f64 = w.iter().map(|x| x.abs()).sum();
    if l1 <= eta * (1.0 + INSIDE_SLACK) {
        return;
    }
    let magnitudes: Vec<f64> = w.iter().map(|x| x.abs()).collect();
    let tau = simplex_threshold(&magnitudes, eta, method);
    for x in w.iter_mut() {
        let a = x.abs();
        *x = if a > tau { (a - tau).copysign(*x) } else { 0.0 };
    }
}

/// Threshold `tau` solving `sum max(v_i - tau, 0) = eta`.
pub(crate) fn simplex_threshold(v: &[f64], eta: f64, method: ProjectionMethod) -> f64 {
    let rough = match method {
        ProjectionMethod::Sort => threshold_by_sort(v, eta),
        ProjectionMethod::Scan => threshold_by_scan(v, eta),
    };
    // Recompute from the support in index order.
    let (sum, count) = v
        .iter()
        .filter(|&&x| x > rough)
        .fold((0.0, 0usize), |(s, n), &x| (s + x, n + 1));
    if count == 0 {
        return rough;
    }
    (sum - eta) / count as f64
}

fn threshold_by_sort(v: &[f64], eta: f64) -> f64 {
    let n = v.len() as f64;
    // tau >= (sum v - eta) / n, so entries at or below that bound never
    // enter the support and need not be sorted
    let floor = (v.iter().sum::<f64>() - eta) / n;
    let mut cand: Vec<f64> = v.iter().copied().filter(|&x| x > floor).collect();
    cand.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = floor;
    for (i, &x) in cand.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - eta) / (i + 1) as f64;
        if x > t {
            tau = t;
        } else {
            break;
        }
    }
    tau
}

fn threshold_by_scan(v: &[f64], eta: f64) -> f64 {
    let mut active: Vec<f64> = Vec::with_capacity(v.len());
    let mut parked: Vec<f64> = Vec::new();
    active.push(v[0]);
    let mut rho = v[0] - eta;
    for &y in &v[1..] {
        if y > rho {
            rho += (y - rho) / (active.len() + 1) as f64;
            if rho > y - eta {
                active.push(y);
            } else {
                parked.append(&mut active);
                active.push(y);
                rho = y - eta;
            }
        }
    }
    for &y in &parked {
        if y > rho {
            active.push(y);
            rho += (y - rho) / active.len() as f64;
        }
    }
    loop {
        let before = active.len();
        let mut kept = 0;
        for i in 0..before {
            let y = active[i];
            if y > rho {
                active[kept] = y;
                kept += 1;
            } else {
                let remaining = (before - i - 1) + kept;
                if remaining > 0 {
                    rho += (rho - y) / remaining as f64;
                }
            }
        }
        active.truncate(kept);
        if kept == before {
            break;
        }
    }
    rho
}
