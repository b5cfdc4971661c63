//! k-means on the projected data: k-means++ seeding, Lloyd iterations,
//! empty-cluster repair and best-of-replicates selection.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::objective::cluster_means;
use crate::types::{CentroidMatrix, LabelAssignment};

/// Default Lloyd iteration cap.
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansOutcome {
    pub labels: LabelAssignment,
    pub centers: CentroidMatrix,
    /// `1/2 ||Y mu - Z||_F^2`.
    pub wcss: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Row `i` of a standard-layout view.
fn row<'a>(z: &'a ArrayView2<'_, f64>, i: usize) -> &'a [f64] {
    let d = z.ncols();
    &z.as_slice().expect("standard layout")[i * d..(i + 1) * d]
}

fn count_distinct_rows(z: ArrayView2<'_, f64>) -> usize {
    let mut rows: Vec<Vec<f64>> = z.rows().into_iter().map(|r| r.to_vec()).collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows.dedup();
    rows.len()
}

/// D^2-weighted seeding: the first center is a uniformly drawn row, each
/// further one a row drawn with probability proportional to its squared
/// distance to the nearest center chosen so far.
pub fn kmeanspp_seed(z: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    kmeanspp_with(z, k, &mut rng)
}

fn kmeanspp_with(z: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    let z = z.as_standard_layout();
    let z = z.view();
    let m = z.nrows();
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    if m < k {
        return Err(Error::TooFewDistinctRows { needed: k, found: m });
    }
    let mut centers = Array2::zeros((k, z.ncols()));
    let first = rng.random_range(0..m);
    centers.row_mut(0).assign(&z.row(first));
    let mut nearest: Vec<f64> = (0..m)
        .map(|i| sq_dist(row(&z, i), row(&z, first)))
        .collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        if !(total > 0.0) {
            return Err(Error::TooFewDistinctRows {
                needed: k,
                found: count_distinct_rows(z),
            });
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in nearest.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let pick = pick.expect("positive total implies a positive weight");
        centers.row_mut(c).assign(&z.row(pick));
        let chosen = row(&z, pick);
        for (i, n) in nearest.iter_mut().enumerate() {
            let d = sq_dist(row(&z, i), chosen);
            if d < *n {
                *n = d;
            }
        }
    }
    Ok(centers)
}

/// Nearest center for every row; ties go to the lower center index.
/// Returns labels and the squared distances to the assigned centers.
fn assign(z: ArrayView2<'_, f64>, centers: ArrayView2<'_, f64>) -> (Vec<usize>, Vec<f64>) {
    let mut labels = Vec::with_capacity(z.nrows());
    let mut dists = Vec::with_capacity(z.nrows());
    for i in 0..z.nrows() {
        let zi = row(&z, i);
        let mut best = (0, f64::INFINITY);
        for j in 0..centers.nrows() {
            let d = sq_dist(zi, row(&centers, j));
            if d < best.1 {
                best = (j, d);
            }
        }
        labels.push(best.0);
        dists.push(best.1);
    }
    (labels, dists)
}

/// Fills every empty cluster with the sample farthest from its current
/// center, taken from a cluster that keeps at least one member.
pub fn repair_empty_clusters(
    labels: &[usize],
    z: ArrayView2<'_, f64>,
    centers: ArrayView2<'_, f64>,
) -> Result<Vec<usize>> {
    let (z, centers) = (z.as_standard_layout(), centers.as_standard_layout());
    let (z, centers) = (z.view(), centers.view());
    let k = centers.nrows();
    let m = z.nrows();
    if labels.len() != m {
        return Err(Error::DimensionMismatch {
            axis: "labels vs Z rows",
            expected: m,
            got: labels.len(),
        });
    }
    if m < k {
        return Err(Error::invalid("k", format!("cannot fill {k} clusters with {m} samples")));
    }
    let mut labels = labels.to_vec();
    let mut sizes = vec![0usize; k];
    for (sample, &l) in labels.iter().enumerate() {
        if l >= k {
            return Err(Error::LabelOutOfRange { sample, label: l, k });
        }
        sizes[l] += 1;
    }
    if sizes.iter().all(|&s| s > 0) {
        return Ok(labels);
    }
    let mut dist: Vec<f64> = (0..m)
        .map(|i| sq_dist(row(&z, i), row(&centers, labels[i])))
        .collect();
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        // farthest sample whose cluster can spare it; ties to the lower index
        let mut pick: Option<usize> = None;
        for i in 0..m {
            if sizes[labels[i]] < 2 {
                continue;
            }
            if pick.is_none_or(|p| dist[i] > dist[p]) {
                pick = Some(i);
            }
        }
        let i = pick.expect("m >= k leaves a cluster with two members");
        sizes[labels[i]] -= 1;
        labels[i] = empty;
        sizes[empty] = 1;
        // the moved sample now is its cluster's center
        dist[i] = 0.0;
    }
    Ok(labels)
}

fn wcss(z: ArrayView2<'_, f64>, labels: &[usize], centers: ArrayView2<'_, f64>) -> f64 {
    0.5 * labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(row(&z, i), row(&centers, l)))
        .sum::<f64>()
}

/// Lloyd iterations from `init_centers` until the assignment is stable or
/// `max_iter` center updates have been made.
pub fn lloyd(z: ArrayView2<'_, f64>, init_centers: ArrayView2<'_, f64>, max_iter: usize) -> Result<KmeansOutcome> {
    let k = init_centers.nrows();
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    if init_centers.ncols() != z.ncols() {
        return Err(Error::DimensionMismatch {
            axis: "center columns vs Z columns",
            expected: z.ncols(),
            got: init_centers.ncols(),
        });
    }
    if z.nrows() < k {
        return Err(Error::invalid("k", format!("k = {k} exceeds the {} samples", z.nrows())));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter", "must be at least 1"));
    }
    let z = z.as_standard_layout();
    let init = init_centers.as_standard_layout().into_owned();
    let (labels, _) = assign(z.view(), init.view());
    iterate(z.view(), labels, init, max_iter)
}

/// Lloyd iterations started from an existing assignment.
pub fn lloyd_from_labels(z: ArrayView2<'_, f64>, labels: &LabelAssignment, max_iter: usize) -> Result<KmeansOutcome> {
    if labels.len() != z.nrows() {
        return Err(Error::DimensionMismatch {
            axis: "labels vs Z rows",
            expected: z.nrows(),
            got: labels.len(),
        });
    }
    let z = z.as_standard_layout();
    let centers = cluster_means(labels.labels(), labels.k(), z.view())?;
    iterate(z.view(), labels.labels().to_vec(), centers, max_iter.max(1))
}

fn iterate(
    z: ArrayView2<'_, f64>,
    mut labels: Vec<usize>,
    mut centers: Array2<f64>,
    max_iter: usize,
) -> Result<KmeansOutcome> {
    let k = centers.nrows();
    let mut iterations = 0;
    loop {
        labels = repair_empty_clusters(&labels, z, centers.view())?;
        centers = cluster_means(&labels, k, z)?;
        iterations += 1;
        if iterations >= max_iter {
            break;
        }
        let (next, _) = assign(z, centers.view());
        if next == labels {
            break;
        }
        labels = next;
    }
    let wcss = wcss(z, &labels, centers.view());
    Ok(KmeansOutcome {
        labels: LabelAssignment::new(labels, k)?,
        centers: CentroidMatrix::new(centers),
        wcss,
        iterations,
    })
}

/// One seeded k-means++ / Lloyd run; replicate `r` of
/// [`best_of_replicates`] uses `seed + r`.
pub fn single_run(z: ArrayView2<'_, f64>, k: usize, seed: u64, max_iter: usize) -> Result<KmeansOutcome> {
    let init = kmeanspp_seed(z, k, seed)?;
    lloyd(z, init.view(), max_iter)
}

/// Best (lowest wcss, then lowest replicate index) of `replicates`
/// independent runs seeded `seed, seed + 1, ...`.
pub fn best_of_replicates(
    z: ArrayView2<'_, f64>,
    k: usize,
    replicates: usize,
    seed: u64,
    max_iter: usize,
) -> Result<KmeansOutcome> {
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    let run = |r: usize| single_run(z, k, seed.wrapping_add(r as u64), max_iter);

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<KmeansOutcome>> = {
        use rayon::prelude::*;
        (0..replicates).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<KmeansOutcome>> = (0..replicates).map(run).collect();

    let mut best: Option<KmeansOutcome> = None;
    for outcome in outcomes {
        let outcome = outcome?;
        if best.as_ref().is_none_or(|b| outcome.wcss < b.wcss) {
            best = Some(outcome);
        }
    }
    Ok(best.expect("at least one replicate"))
}
