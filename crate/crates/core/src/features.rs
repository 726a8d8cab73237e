//! Topological feature vectors of communities: node counts, transitivity,
//! diameter, and mean degree/closeness/betweenness/harmonic centrality.
//!
//! All distance-based metrics use the undirected, unweighted view of the
//! community subgraph (hop distances). N is the total node count.

use crate::community::Community;
use crate::graph::ActivityGraph;
use crate::Scalar;
use std::collections::VecDeque;

pub const FEATURE_NAMES: [&str; 8] = [
    "n_addresses",
    "n_transactions",
    "transitivity",
    "diameter",
    "degree_c",
    "closeness",
    "betweenness",
    "harmonic",
];

/// The 8-dimensional description of one community, in fixed dimension order.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureVector<S> {
    pub n_addresses: usize,
    pub n_transactions: usize,
    pub transitivity: S,
    pub diameter: usize,
    pub mean_degree_centrality: S,
    pub mean_closeness: S,
    pub mean_betweenness: S,
    pub mean_harmonic: S,
}

impl<S: Scalar> FeatureVector<S> {
    /// The vector as a raw 8-dimensional point.
    pub fn to_point(&self) -> [S; 8] {
        [
            S::from_count(self.n_addresses),
            S::from_count(self.n_transactions),
            self.transitivity,
            S::from_count(self.diameter),
            self.mean_degree_centrality,
            self.mean_closeness,
            self.mean_betweenness,
            self.mean_harmonic,
        ]
    }
}

/// Undirected unweighted adjacency lists of a graph, deduplicated, ascending.
pub fn undirected_adjacency(graph: &ActivityGraph) -> Vec<Vec<usize>> {
    graph
        .node_ids()
        .map(|id| {
            graph
                .undirected_neighbors(id)
                .into_iter()
                .map(|n| n as usize)
                .collect()
        })
        .collect()
}

/// Hop distances from `source`; `None` for unreachable nodes.
fn bfs_distances(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].expect("queued nodes have distances");
        for &u in &adj[v] {
            if dist[u].is_none() {
                dist[u] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Graph transitivity: 3 × triangles / connected triads; 0 when no triads.
/// Adjacency lists must be sorted (as `undirected_adjacency` produces).
pub fn transitivity<S: Scalar>(adj: &[Vec<usize>]) -> S {
    let mut closed = 0usize; // triangle corners, i.e. 3 × triangle count
    let mut triads = 0usize; // paths of length two centered anywhere
    for neighbors in adj {
        let d = neighbors.len();
        triads += d * d.saturating_sub(1) / 2;
        for (i, &u) in neighbors.iter().enumerate() {
            for &w in &neighbors[i + 1..] {
                if adj[u].binary_search(&w).is_ok() {
                    closed += 1;
                }
            }
        }
    }
    if triads == 0 {
        S::zero()
    } else {
        S::from_count(closed) / S::from_count(triads)
    }
}

/// Maximum eccentricity; for disconnected graphs, the maximum over
/// connected components. A single node has diameter 0.
pub fn diameter(adj: &[Vec<usize>]) -> usize {
    let mut max = 0;
    for v in 0..adj.len() {
        for d in bfs_distances(adj, v).into_iter().flatten() {
            max = max.max(d);
        }
    }
    max
}

/// Mean over nodes of deg(v)/(N−1); 0 for a single node.
pub fn mean_degree_centrality<S: Scalar>(adj: &[Vec<usize>]) -> S {
    let n = adj.len();
    if n <= 1 {
        return S::zero();
    }
    let total: usize = adj.iter().map(Vec::len).sum();
    S::from_count(total) / (S::from_count(n - 1) * S::from_count(n))
}

/// Mean Wasserman–Faust closeness: (r_v/(N−1)) · (r_v/Σd) with r_v the
/// count of nodes reachable from v; isolated nodes contribute 0.
pub fn mean_closeness<S: Scalar>(adj: &[Vec<usize>]) -> S {
    let n = adj.len();
    if n <= 1 {
        return S::zero();
    }
    let mut sum = S::zero();
    for v in 0..n {
        let mut reachable = 0usize;
        let mut total = 0usize;
        for d in bfs_distances(adj, v).into_iter().flatten() {
            if d > 0 {
                reachable += 1;
                total += d;
            }
        }
        if reachable > 0 {
            let r = S::from_count(reachable);
            sum += (r / S::from_count(n - 1)) * (r / S::from_count(total));
        }
    }
    sum / S::from_count(n)
}

/// Mean harmonic centrality: (1/(N−1)) Σ_{u≠v} 1/d(u,v), with 1/∞ = 0.
pub fn mean_harmonic<S: Scalar>(adj: &[Vec<usize>]) -> S {
    let n = adj.len();
    if n <= 1 {
        return S::zero();
    }
    let mut sum = S::zero();
    for v in 0..n {
        for d in bfs_distances(adj, v).into_iter().flatten() {
            if d > 0 {
                sum += S::one() / S::from_count(d);
            }
        }
    }
    sum / (S::from_count(n - 1) * S::from_count(n))
}

/// Mean shortest-path betweenness (Brandes accumulation), with each node's
/// unordered-pair dependency normalized by 2/((N−1)(N−2)); 0 for N ≤ 2.
pub fn mean_betweenness<S: Scalar>(adj: &[Vec<usize>]) -> S {
    let n = adj.len();
    if n <= 2 {
        return S::zero();
    }
    // Ordered-pair accumulation; undirected graphs count each pair twice,
    // which the normalization below absorbs.
    let mut between = vec![S::zero(); n];
    for s in 0..n {
        let mut stack = Vec::new();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![S::zero(); n];
        let mut dist = vec![None::<usize>; n];
        sigma[s] = S::one();
        dist[s] = Some(0);
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            let dv = dist[v].expect("queued nodes have distances");
            for &u in &adj[v] {
                if dist[u].is_none() {
                    dist[u] = Some(dv + 1);
                    queue.push_back(u);
                }
                if dist[u] == Some(dv + 1) {
                    sigma[u] = sigma[u] + sigma[v];
                    preds[u].push(v);
                }
            }
        }
        let mut delta = vec![S::zero(); n];
        for &v in stack.iter().rev() {
            let contribution = S::one() + delta[v];
            for &p in &preds[v] {
                delta[p] += sigma[p] / sigma[v] * contribution;
            }
            if v != s {
                between[v] += delta[v];
            }
        }
    }
    let scale = S::from_count(n - 1) * S::from_count(n - 2);
    let total = between.into_iter().fold(S::zero(), |a, b| a + b);
    total / scale / S::from_count(n)
}

/// Assembles the full 8-dimensional vector for one graph.
pub fn graph_features<S: Scalar>(graph: &ActivityGraph) -> FeatureVector<S> {
    let adj = undirected_adjacency(graph);
    FeatureVector {
        n_addresses: graph.address_count(),
        n_transactions: graph.transaction_count(),
        transitivity: transitivity(&adj),
        diameter: diameter(&adj),
        mean_degree_centrality: mean_degree_centrality(&adj),
        mean_closeness: mean_closeness(&adj),
        mean_betweenness: mean_betweenness(&adj),
        mean_harmonic: mean_harmonic(&adj),
    }
}

pub fn community_features<S: Scalar>(community: &Community) -> FeatureVector<S> {
    graph_features(&community.subgraph)
}

/// Per-dimension mean and population standard deviation of a feature corpus.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Standardization<S> {
    pub mean: [S; 8],
    pub sigma: [S; 8],
}

/// Z-scores each vector per dimension. Dimensions with zero spread map to
/// zero so constant features (like transitivity on bipartite communities)
/// do not poison the distance metric. Spread below √ε relative to the
/// dimension's magnitude counts as zero: a feature that is analytically
/// constant but computed through different code paths picks up ULP-level
/// noise, and dividing by that noise would turn it into garbage coordinates.
pub fn standardize<S: Scalar>(vectors: &[FeatureVector<S>]) -> (Vec<[S; 8]>, Standardization<S>) {
    assert!(!vectors.is_empty(), "standardize needs at least one vector");
    let count = S::from_count(vectors.len());
    let points: Vec<[S; 8]> = vectors.iter().map(FeatureVector::to_point).collect();
    let mut mean = [S::zero(); 8];
    for point in &points {
        for (m, &x) in mean.iter_mut().zip(point) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= count;
    }
    let mut sigma = [S::zero(); 8];
    for point in &points {
        for ((sig, &x), &m) in sigma.iter_mut().zip(point).zip(&mean) {
            *sig += (x - m) * (x - m);
        }
    }
    for (sig, &m) in sigma.iter_mut().zip(&mean) {
        *sig = (*sig / count).sqrt();
        let scale = if m.abs() > S::one() {
            m.abs()
        } else {
            S::one()
        };
        if *sig <= S::epsilon().sqrt() * scale {
            *sig = S::zero();
        }
    }
    let standardized = points
        .into_iter()
        .map(|point| {
            let mut z = [S::zero(); 8];
            for i in 0..8 {
                if sigma[i] > S::zero() {
                    z[i] = (point[i] - mean[i]) / sigma[i];
                }
            }
            z
        })
        .collect();
    (standardized, Standardization { mean, sigma })
}

/// Writes the feature matrix CSV; standardized `_z` columns follow the raw
/// ones when standardization is supplied.
pub fn write_feature_matrix<S: Scalar, W: std::io::Write>(
    communities: &[Community],
    vectors: &[FeatureVector<S>],
    standardized: Option<&[[S; 8]]>,
    writer: W,
) -> csv::Result<()> {
    assert_eq!(communities.len(), vectors.len());
    let mut csv_writer = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = vec!["graph_id".into(), "community_id".into()];
    header.extend(FEATURE_NAMES.iter().map(|n| n.to_string()));
    if standardized.is_some() {
        header.extend(FEATURE_NAMES.iter().map(|n| format!("{n}_z")));
    }
    csv_writer.write_record(&header)?;
    for (i, (community, vector)) in communities.iter().zip(vectors).enumerate() {
        let mut row = vec![
            community.graph_id.to_string(),
            community.community_id.to_string(),
        ];
        row.extend(vector.to_point().iter().map(|x| format!("{x}")));
        if let Some(points) = standardized {
            row.extend(points[i].iter().map(|x| format!("{x}")));
        }
        csv_writer.write_record(&row)?;
    }
    csv_writer.flush()?;
    Ok(())
}
