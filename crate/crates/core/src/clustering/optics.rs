//! OPTICS ordering with a generating radius of ∞, plus DBSCAN-equivalent
//! cluster extraction from the reachability plot at any ε.

use super::{core_distances, euclidean, ClusterAssignment, ClusterError};
use crate::Scalar;

/// Density ordering of a point set.
///
/// `ordering` is a permutation of point indices; `reachability[i]` belongs to
/// the point at ordering position `i` (the first point of each density
/// component is ∞); `core_distance` is indexed by point, and is the distance
/// to the `min_pts`-th nearest neighbor counting the point itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityPlot<S> {
    pub ordering: Vec<usize>,
    pub reachability: Vec<S>,
    pub core_distance: Vec<S>,
    pub min_pts: usize,
}

/// Standard OPTICS expansion. The next point is always the unprocessed one
/// with the smallest pending reachability, ties broken by point index, so
/// the ordering is deterministic.
pub fn optics_order<S: Scalar, P: AsRef<[S]> + Sync>(
    points: &[P],
    min_pts: usize,
) -> ReachabilityPlot<S> {
    let n = points.len();
    let core_distance = core_distances(points, min_pts);
    let mut pending = vec![S::infinity(); n];
    let mut processed = vec![false; n];
    let mut ordering = Vec::with_capacity(n);
    let mut reachability = Vec::with_capacity(n);
    for _ in 0..n {
        let next = (0..n)
            .filter(|&i| !processed[i])
            .min_by(|&a, &b| {
                pending[a]
                    .partial_cmp(&pending[b])
                    .expect("reachability is never NaN")
            })
            .expect("an unprocessed point remains");
        processed[next] = true;
        ordering.push(next);
        reachability.push(pending[next]);
        // Only core points extend density reach; with a generating radius of
        // ∞ a point is non-core exactly when the whole set is below min_pts.
        if core_distance[next].is_finite() {
            for q in 0..n {
                if processed[q] {
                    continue;
                }
                let d = euclidean(points[next].as_ref(), points[q].as_ref());
                let reach = if core_distance[next] > d {
                    core_distance[next]
                } else {
                    d
                };
                if reach < pending[q] {
                    pending[q] = reach;
                }
            }
        }
    }
    ReachabilityPlot {
        ordering,
        reachability,
        core_distance,
        min_pts,
    }
}

/// Cuts the reachability plot at `eps`, reproducing a DBSCAN clustering:
/// a new cluster starts at an ordered point with reachability > ε but core
/// distance ≤ ε; points with both above ε are outliers; everything else
/// joins the cluster currently being built.
pub fn extract_dbscan<S: Scalar>(
    plot: &ReachabilityPlot<S>,
    eps: S,
) -> Result<ClusterAssignment, ClusterError> {
    if eps <= S::zero() {
        return Err(ClusterError::NonPositiveEps(format!("{eps}")));
    }
    let n = plot.ordering.len();
    let mut labels = vec![-1i32; n];
    let mut current = -1i32;
    let mut next_id = 0i32;
    for (pos, &point) in plot.ordering.iter().enumerate() {
        if plot.reachability[pos] > eps {
            if plot.core_distance[point] <= eps {
                current = next_id;
                next_id += 1;
                labels[point] = current;
            } else {
                labels[point] = -1;
            }
        } else {
            // Reachability ≤ ε implies a core-at-ε point inside the cluster
            // being built set it, so `current` is a live cluster here.
            labels[point] = current;
        }
    }
    Ok(ClusterAssignment::from_labels(labels))
}
