//! Lloyd iteration.
//!
//! One step assigns every record to its nearest centroid (squared Euclidean,
//! ties to the lowest index), refills empty clusters, then moves each
//! centroid to the mean of its members. An empty cluster seizes the record
//! farthest from its current centroid among clusters that can spare one.

use super::{member_means, ClusterError, Clustering};
use crate::matrix::{squared_distance, Matrix};

/// Outcome of a Lloyd run, with the SSE after every step.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub clustering: Clustering,
    pub iterations: usize,
    /// SSE after each completed step; non-increasing.
    pub sse_history: Vec<f64>,
    /// True when the run stopped at an assignment fixpoint or because the
    /// centroids moved less than the tolerance.
    pub converged: bool,
}

/// Runs Lloyd's algorithm from `initial_centroids` until the assignments
/// stop changing, every centroid moves less than `tolerance`, or
/// `max_iterations` steps have run.
pub fn kmeans(
    data: &Matrix,
    initial_centroids: &Matrix,
    max_iterations: usize,
    tolerance: f64,
) -> Result<Clustering, ClusterError> {
    kmeans_traced(data, initial_centroids, max_iterations, tolerance).map(|r| r.clustering)
}

/// [`kmeans`] with the per-step SSE trace.
pub fn kmeans_traced(
    data: &Matrix,
    initial_centroids: &Matrix,
    max_iterations: usize,
    tolerance: f64,
) -> Result<LloydRun, ClusterError> {
    let (n, k) = (data.rows(), initial_centroids.rows());
    if n == 0 {
        return Err(ClusterError::NoRecords);
    }
    if k == 0 {
        return Err(ClusterError::NoCentroids);
    }
    if k > n {
        return Err(ClusterError::KExceedsN { k, n });
    }
    if initial_centroids.cols() != data.cols() {
        return Err(ClusterError::DimensionMismatch {
            expected: data.cols(),
            got: initial_centroids.cols(),
        });
    }
    if !data.is_finite() || !initial_centroids.is_finite() || !tolerance.is_finite() {
        return Err(ClusterError::NonFinite);
    }
    if max_iterations == 0 {
        return Err(ClusterError::InvalidConfig(
            "max_iterations must be >= 1".into(),
        ));
    }
    for a in 0..k {
        for b in a + 1..k {
            if initial_centroids.row(a) == initial_centroids.row(b) {
                return Err(ClusterError::DuplicateInitialCentroids(a, b));
            }
        }
    }
    Ok(lloyd(
        data,
        initial_centroids.clone(),
        max_iterations,
        tolerance,
        true,
    ))
}

/// Unchecked Lloyd loop used by both the public entry points and the
/// genetic search. Requires `1 <= k <= n`.
///
/// Assignment keeps Hamerly bounds: an upper bound on each record's
/// distance to its centroid and a lower bound on the distance to any other.
/// A record is rescanned only when the bounds cannot prove its centroid is
/// strictly nearest, so the result is identical to a full scan.
pub(crate) fn lloyd(
    data: &Matrix,
    mut centroids: Matrix,
    max_iterations: usize,
    tolerance: f64,
    trace: bool,
) -> LloydRun {
    let (n, k) = (data.rows(), centroids.rows());
    let mut assignments = vec![usize::MAX; n];
    let mut next = vec![0usize; n];
    let mut upper = vec![f64::INFINITY; n];
    let mut lower = vec![0.0f64; n];
    let mut counts = vec![0usize; k];
    let mut half_gap = vec![0.0f64; k];
    let mut sse_history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iterations {
        iterations += 1;
        nearest_gaps(&centroids, &mut half_gap);
        for i in 0..n {
            let x = data.row(i);
            if iterations > 1 {
                let bound = half_gap[next[i]].max(lower[i]);
                if safely_below(upper[i], bound) {
                    continue;
                }
                upper[i] = squared_distance(x, centroids.row(next[i])).sqrt();
                if safely_below(upper[i], bound) {
                    continue;
                }
            }
            let (best, best_d, second_d) = scan(x, &centroids);
            next[i] = best;
            upper[i] = best_d.sqrt();
            lower[i] = second_d.sqrt();
        }
        counts.iter_mut().for_each(|c| *c = 0);
        for &a in &next {
            counts[a] += 1;
        }
        if counts.contains(&0) {
            let mut dist: Vec<f64> = (0..n)
                .map(|i| squared_distance(data.row(i), centroids.row(next[i])))
                .collect();
            let seized = repair_empty(&mut next, &mut dist, &mut counts);
            for i in seized {
                upper[i] = f64::INFINITY;
                lower[i] = 0.0;
            }
        }
        let fixpoint = next == assignments;
        assignments.copy_from_slice(&next);

        let updated = member_means(data, &assignments, k).expect("repair leaves no empty cluster");
        let moved: Vec<f64> = (0..k)
            .map(|j| squared_distance(updated.row(j), centroids.row(j)).sqrt())
            .collect();
        centroids = updated;
        if trace {
            sse_history.push(super::sse_to_centroids(data, &assignments, &centroids));
        }
        let shift = moved.iter().copied().fold(0.0f64, f64::max);
        if fixpoint || shift < tolerance {
            converged = true;
            break;
        }

        // Largest and second-largest move, for the lower bounds.
        let (mut m1, mut m2, mut arg) = (0.0f64, 0.0f64, usize::MAX);
        for (j, &m) in moved.iter().enumerate() {
            if m > m1 {
                (m2, m1, arg) = (m1, m, j);
            } else if m > m2 {
                m2 = m;
            }
        }
        for i in 0..n {
            let a = next[i];
            upper[i] += moved[a];
            lower[i] -= if a == arg { m2 } else { m1 };
        }
    }

    LloydRun {
        clustering: Clustering {
            assignments,
            centroids,
        },
        iterations,
        sse_history,
        converged,
    }
}

/// `a < b` with a relative margin that absorbs rounding in the bounds.
#[inline]
fn safely_below(a: f64, b: f64) -> bool {
    a * (1.0 + 1e-9) + 1e-300 < b
}

/// Half the distance from each centroid to its nearest other centroid.
fn nearest_gaps(centroids: &Matrix, out: &mut [f64]) {
    let k = centroids.rows();
    out.iter_mut().for_each(|g| *g = f64::INFINITY);
    for a in 0..k {
        for b in a + 1..k {
            let d = squared_distance(centroids.row(a), centroids.row(b)).sqrt() / 2.0;
            out[a] = out[a].min(d);
            out[b] = out[b].min(d);
        }
    }
}

/// Nearest centroid (lowest index on ties) with the squared distances to
/// the nearest and the second nearest.
#[inline]
fn scan(x: &[f64], centroids: &Matrix) -> (usize, f64, f64) {
    let mut best = 0;
    let mut best_d = squared_distance(x, centroids.row(0));
    let mut second_d = f64::INFINITY;
    for j in 1..centroids.rows() {
        let d = squared_distance(x, centroids.row(j));
        if d < best_d {
            second_d = best_d;
            best = j;
            best_d = d;
        } else if d < second_d {
            second_d = d;
        }
    }
    (best, best_d, second_d)
}

/// Gives every empty cluster the record farthest from its current centroid,
/// taken from a cluster with more than one member. Lowest indices win ties.
/// Returns the records that moved.
fn repair_empty(assignments: &mut [usize], dist: &mut [f64], counts: &mut [usize]) -> Vec<usize> {
    let mut seized = Vec::new();
    for j in 0..counts.len() {
        if counts[j] > 0 {
            continue;
        }
        let mut pick = None;
        let mut far = f64::NEG_INFINITY;
        for (i, (&a, &d)) in assignments.iter().zip(dist.iter()).enumerate() {
            if counts[a] > 1 && d > far {
                far = d;
                pick = Some(i);
            }
        }
        let i = pick.expect("k <= n guarantees a donor cluster");
        counts[assignments[i]] -= 1;
        assignments[i] = j;
        counts[j] = 1;
        dist[i] = 0.0;
        seized.push(i);
    }
    seized
}
