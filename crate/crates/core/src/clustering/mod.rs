//! Density clustering of standardized feature points: OPTICS ordering with
//! DBSCAN extraction over an ε sweep, HDBSCAN, and assignment comparison.

pub mod compare;
pub mod hdbscan;
pub mod optics;

pub use compare::{
    compare_assignments, write_agreement_json, AgreementReport, ContingencyCell, MatchedPair,
};
pub use hdbscan::hdbscan;
pub use optics::{extract_dbscan, optics_order, ReachabilityPlot};

use crate::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("eps must be positive, got {0}")]
    NonPositiveEps(String),
    #[error("eps sweep must be strictly increasing")]
    UnorderedSweep,
    #[error("min_pts must be at least 2, got {0}")]
    MinPtsTooSmall(usize),
    #[error("assignments cover {a} and {b} points; counts must match")]
    LengthMismatch { a: usize, b: usize },
}

/// Parameters shared by both clustering algorithms. Distances are Euclidean
/// on the standardized feature points.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig<S> {
    pub min_pts: usize,
    pub eps_sweep: Vec<S>,
}

impl<S: Scalar> Default for ClusterConfig<S> {
    fn default() -> Self {
        let eps = [0.1, 0.5, 0.9, 1.0, 1.5, 2.0, 3.0, 5.0];
        ClusterConfig {
            min_pts: 5,
            eps_sweep: eps
                .iter()
                .map(|&e| S::from_f64(e).expect("eps representable"))
                .collect(),
        }
    }
}

impl<S: Scalar> ClusterConfig<S> {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.min_pts < 2 {
            return Err(ClusterError::MinPtsTooSmall(self.min_pts));
        }
        for eps in &self.eps_sweep {
            if *eps <= S::zero() {
                return Err(ClusterError::NonPositiveEps(format!("{eps}")));
            }
        }
        if self.eps_sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ClusterError::UnorderedSweep);
        }
        Ok(())
    }
}

/// Point → cluster map. Cluster ids are dense `0..n_clusters` in order of
/// first appearance by point index; `-1` marks outliers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    labels: Vec<i32>,
    n_clusters: usize,
}

impl ClusterAssignment {
    /// Canonicalizes arbitrary labels: non-negative ids are renumbered by
    /// first appearance, `-1` passes through.
    pub fn from_labels(raw: Vec<i32>) -> Self {
        let mut remap: std::collections::HashMap<i32, i32> = std::collections::HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for label in raw {
            if label < 0 {
                labels.push(-1);
            } else {
                let next = remap.len() as i32;
                labels.push(*remap.entry(label).or_insert(next));
            }
        }
        ClusterAssignment {
            n_clusters: remap.len(),
            labels,
        }
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn n_outliers(&self) -> usize {
        self.labels.iter().filter(|&&l| l < 0).count()
    }
}

pub(crate) fn euclidean<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(S::zero(), |acc, d| acc + d)
        .sqrt()
}

/// Distance to each point's `min_pts`-th nearest neighbor, the point itself
/// included; ∞ when there are fewer than `min_pts` points in total.
pub(crate) fn core_distances<S: Scalar, P: AsRef<[S]> + Sync>(
    points: &[P],
    min_pts: usize,
) -> Vec<S> {
    if points.len() < min_pts {
        return vec![S::infinity(); points.len()];
    }
    points
        .par_iter()
        .map(|p| {
            let mut dists: Vec<S> = points
                .iter()
                .map(|q| euclidean(p.as_ref(), q.as_ref()))
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).expect("distances are not NaN"));
            dists[min_pts - 1]
        })
        .collect()
}

/// Extraction results for one swept ε.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<S> {
    pub eps: S,
    pub n_clusters: usize,
    pub n_outliers: usize,
    pub assignment: ClusterAssignment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport<S> {
    pub per_eps: Vec<SweepPoint<S>>,
    /// Smallest swept ε whose assignment already equals every later one.
    pub saturation_eps: Option<S>,
    pub plot: ReachabilityPlot<S>,
}

/// Runs one OPTICS ordering and extracts a DBSCAN assignment at every swept
/// ε, reporting where the sweep saturates.
pub fn sweep_eps<S: Scalar, P: AsRef<[S]> + Sync>(
    points: &[P],
    cfg: &ClusterConfig<S>,
) -> Result<SweepReport<S>, ClusterError> {
    cfg.validate()?;
    let plot = optics_order(points, cfg.min_pts);
    let mut per_eps = Vec::with_capacity(cfg.eps_sweep.len());
    for &eps in &cfg.eps_sweep {
        let assignment = extract_dbscan(&plot, eps)?;
        per_eps.push(SweepPoint {
            eps,
            n_clusters: assignment.n_clusters(),
            n_outliers: assignment.n_outliers(),
            assignment,
        });
    }
    let saturation_eps = if per_eps.is_empty() {
        None
    } else {
        let mut idx = per_eps.len() - 1;
        while idx > 0 && per_eps[idx - 1].assignment == per_eps[idx].assignment {
            idx -= 1;
        }
        Some(per_eps[idx].eps)
    };
    Ok(SweepReport {
        per_eps,
        saturation_eps,
        plot,
    })
}

/// Writes the sweep summary CSV: `eps,n_clusters,n_outliers`.
pub fn write_sweep_csv<S: Scalar, W: std::io::Write>(
    report: &SweepReport<S>,
    writer: W,
) -> csv::Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer.write_record(["eps", "n_clusters", "n_outliers"])?;
    for point in &report.per_eps {
        csv_writer.write_record([
            format!("{}", point.eps),
            point.n_clusters.to_string(),
            point.n_outliers.to_string(),
        ])?;
    }
    csv_writer.flush()?;
    Ok(())
}

/// Writes per-community cluster labels from both algorithms:
/// `graph_id,community_id,optics_cluster,hdbscan_cluster`.
pub fn write_assignment_csv<W: std::io::Write>(
    coords: &[(usize, usize)],
    optics: &ClusterAssignment,
    hdbscan: &ClusterAssignment,
    writer: W,
) -> csv::Result<()> {
    assert_eq!(coords.len(), optics.len());
    assert_eq!(coords.len(), hdbscan.len());
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer.write_record([
        "graph_id",
        "community_id",
        "optics_cluster",
        "hdbscan_cluster",
    ])?;
    for (i, (graph_id, community_id)) in coords.iter().enumerate() {
        csv_writer.write_record([
            graph_id.to_string(),
            community_id.to_string(),
            optics.labels()[i].to_string(),
            hdbscan.labels()[i].to_string(),
        ])?;
    }
    csv_writer.flush()?;
    Ok(())
}
