//! Brute-force reference implementations shared by the oracle and acceptance
//! suites: random input generators, the pairwise modularity sum, exhaustive
//! partition search, Floyd–Warshall and path-counting centralities,
//! direct-definition DBSCAN, and pair-counting ARI.
//!
//! Everything here favors the most literal restatement of a definition over
//! speed and shares no code with the library internals it checks; agreement
//! on randomized inputs is the evidence that the fast versions compute the
//! right quantity.
#![allow(dead_code)] // each test binary pulls in its own subset

use mixtopo_core::graph::ActivityGraph;
use mixtopo_core::ingest::TxRecord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Random inputs
// ---------------------------------------------------------------------------

/// Random transaction over a small address pool. The first entry on each
/// side always carries a positive amount so every transaction keeps at least
/// one payer and one payee; later entries may be zero to exercise the
/// node-without-edge path.
pub fn random_record(rng: &mut ChaCha8Rng, serial: usize, pool: usize) -> TxRecord {
    let side = |rng: &mut ChaCha8Rng| -> Vec<(String, u64)> {
        (0..rng.gen_range(1..=3usize))
            .map(|slot| {
                let address = format!("a{:02}", rng.gen_range(0..pool));
                let amount = if slot > 0 && rng.gen_bool(0.1) {
                    0
                } else {
                    rng.gen_range(1..=1_000u64)
                };
                (address, amount)
            })
            .collect()
    };
    TxRecord {
        txid: format!("t{serial:03}"),
        inputs: side(rng),
        outputs: side(rng),
        timestamp: 1_700_000_000 + serial as i64 * 600,
        height: 800_000 + serial as u64,
    }
}

pub fn random_records(rng: &mut ChaCha8Rng, n_txs: usize, pool: usize) -> Vec<TxRecord> {
    (0..n_txs).map(|i| random_record(rng, i, pool)).collect()
}

/// A connected-enough random graph built directly from records.
pub fn random_graph(rng: &mut ChaCha8Rng) -> ActivityGraph {
    loop {
        let n_txs = rng.gen_range(2..=6);
        let pool = rng.gen_range(3..=6);
        let records = random_records(rng, n_txs, pool);
        let mut graph = ActivityGraph::new();
        for record in &records {
            graph.insert_transaction(record);
        }
        if graph.edge_count() > 0 && graph.node_count() <= 10 {
            return graph;
        }
    }
}

// ---------------------------------------------------------------------------
// Modularity: the O(n²) pairwise definition and exhaustive partition search.
// ---------------------------------------------------------------------------

/// Symmetric weight matrix and weighted degrees of the undirected view.
pub fn weight_matrix(graph: &ActivityGraph) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
    let n = graph.node_count();
    let mut a = vec![vec![0f64; n]; n];
    for (u, v, w) in graph.undirected_edges() {
        a[u as usize][v as usize] += w as f64;
        a[v as usize][u as usize] += w as f64;
    }
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    (a, k, two_m)
}

/// Q from its pairwise definition:
/// Q = Σ_{ij same community} [A_ij/(2m) − γ·k_i·k_j/(2m)²].
pub fn oracle_modularity_from(
    a: &[Vec<f64>],
    k: &[f64],
    two_m: f64,
    assignment: &[usize],
    gamma: f64,
) -> f64 {
    let mut q = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            if assignment[i] == assignment[j] {
                q += a[i][j] / two_m - gamma * k[i] * k[j] / (two_m * two_m);
            }
        }
    }
    q
}

pub fn oracle_modularity(graph: &ActivityGraph, assignment: &[usize], gamma: f64) -> f64 {
    let (a, k, two_m) = weight_matrix(graph);
    oracle_modularity_from(&a, &k, two_m, assignment, gamma)
}

/// Visits every partition of n items as a restricted growth string, without
/// materializing the (Bell number sized) list.
pub fn for_each_partition<F: FnMut(&[usize])>(n: usize, visit: &mut F) {
    fn extend<F: FnMut(&[usize])>(prefix: &mut Vec<usize>, n: usize, visit: &mut F) {
        if prefix.len() == n {
            visit(prefix);
            return;
        }
        let limit = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for c in 0..=limit {
            prefix.push(c);
            extend(prefix, n, visit);
            prefix.pop();
        }
    }
    extend(&mut Vec::new(), n, visit)
}

/// Best modularity over every partition of the graph, with one argmax.
pub fn exhaustive_optimum(a: &[Vec<f64>], k: &[f64], two_m: f64, gamma: f64) -> (f64, Vec<usize>) {
    let mut best = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    for_each_partition(a.len(), &mut |p| {
        let q = oracle_modularity_from(a, k, two_m, p, gamma);
        if q > best {
            best = q;
            argmax = p.to_vec();
        }
    });
    (best, argmax)
}

/// Two complete bipartite blocks — three addresses fully wired to three
/// transactions at `block_weight` — joined by a single `bridge_weight` edge.
/// Returns the graph and the two node sets of the intended split.
pub fn bridged_k33(
    block_weight: u64,
    bridge_weight: u64,
) -> (ActivityGraph, BTreeSet<u32>, BTreeSet<u32>) {
    let mut g = ActivityGraph::new();
    let a: Vec<_> = (0..3).map(|i| g.ensure_address(&format!("a{i}"))).collect();
    let t: Vec<_> = (0..3)
        .map(|i| g.ensure_transaction_node(&format!("t{i}")))
        .collect();
    let b: Vec<_> = (0..3).map(|i| g.ensure_address(&format!("b{i}"))).collect();
    let u: Vec<_> = (0..3)
        .map(|i| g.ensure_transaction_node(&format!("u{i}")))
        .collect();
    for &addr in &a {
        for &tx in &t {
            g.add_flow(addr, tx, block_weight);
        }
    }
    for &addr in &b {
        for &tx in &u {
            g.add_flow(tx, addr, block_weight);
        }
    }
    g.add_flow(a[2], u[0], bridge_weight);
    let left: BTreeSet<u32> = a.iter().chain(&t).copied().collect();
    let right: BTreeSet<u32> = b.iter().chain(&u).copied().collect();
    (g, left, right)
}

/// Canonical form of a partition: the set of member sets.
pub fn as_blocks(assignment: &[usize]) -> BTreeSet<BTreeSet<u32>> {
    let mut blocks: BTreeMap<usize, BTreeSet<u32>> = BTreeMap::new();
    for (node, &c) in assignment.iter().enumerate() {
        blocks.entry(c).or_default().insert(node as u32);
    }
    blocks.into_values().collect()
}

// ---------------------------------------------------------------------------
// Centralities: Floyd–Warshall distances, a σ-counting dependency formula,
// and (on tiny graphs) literal enumeration of every shortest path.
// ---------------------------------------------------------------------------

pub fn random_adjacency(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

pub fn floyd_warshall(adj: &[Vec<usize>]) -> Vec<Vec<Option<usize>>> {
    let n = adj.len();
    let mut dist = vec![vec![None; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for (i, neighbors) in adj.iter().enumerate() {
        for &j in neighbors {
            dist[i][j] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(ik), Some(kj)) = (dist[i][k], dist[k][j]) {
                    if dist[i][j].is_none_or(|ij| ik + kj < ij) {
                        dist[i][j] = Some(ik + kj);
                    }
                }
            }
        }
    }
    dist
}

pub fn oracle_diameter(dist: &[Vec<Option<usize>>]) -> usize {
    dist.iter().flatten().filter_map(|d| *d).max().unwrap_or(0)
}

pub fn oracle_closeness(dist: &[Vec<Option<usize>>]) -> f64 {
    let n = dist.len();
    if n <= 1 {
        return 0.0;
    }
    let mut sum = 0.0;
    for row in dist {
        let reachable = row
            .iter()
            .filter(|d| matches!(d, Some(x) if *x > 0))
            .count();
        let total: usize = row.iter().filter_map(|d| *d).sum();
        if reachable > 0 {
            let r = reachable as f64;
            sum += (r / (n - 1) as f64) * (r / total as f64);
        }
    }
    sum / n as f64
}

pub fn oracle_harmonic(dist: &[Vec<Option<usize>>]) -> f64 {
    let n = dist.len();
    if n <= 1 {
        return 0.0;
    }
    let sum: f64 = dist
        .iter()
        .flatten()
        .filter_map(|d| *d)
        .filter(|&d| d > 0)
        .map(|d| 1.0 / d as f64)
        .sum();
    sum / ((n - 1) as f64 * n as f64)
}

/// Shortest-path counts σ[s][t] from the distance matrix: process targets by
/// increasing distance and sum counts over predecessor neighbors.
pub fn path_counts(adj: &[Vec<usize>], dist: &[Vec<Option<usize>>]) -> Vec<Vec<f64>> {
    let n = adj.len();
    let mut sigma = vec![vec![0f64; n]; n];
    for s in 0..n {
        sigma[s][s] = 1.0;
        let mut order: Vec<usize> = (0..n).filter(|&t| dist[s][t].is_some()).collect();
        order.sort_by_key(|&t| dist[s][t]);
        for &t in &order {
            if t == s {
                continue;
            }
            sigma[s][t] = adj[t]
                .iter()
                .filter(|&&w| {
                    dist[s][w].is_some_and(|dw| dw + 1 == dist[s][t].expect("t reachable"))
                })
                .map(|&w| sigma[s][w])
                .sum();
        }
    }
    sigma
}

/// Mean betweenness from the direct dependency formula
/// Σ_{s≠v≠t} σ_sv·σ_vt/σ_st over pairs on whose shortest paths v lies.
pub fn oracle_betweenness(adj: &[Vec<usize>]) -> f64 {
    let n = adj.len();
    if n <= 2 {
        return 0.0;
    }
    let dist = floyd_warshall(adj);
    let sigma = path_counts(adj, &dist);
    let mut total = 0.0;
    for v in 0..n {
        for s in 0..n {
            for t in 0..n {
                if s == v || t == v || s == t {
                    continue;
                }
                if let (Some(sv), Some(vt), Some(st)) = (dist[s][v], dist[v][t], dist[s][t]) {
                    if sv + vt == st {
                        total += sigma[s][v] * sigma[v][t] / sigma[s][t];
                    }
                }
            }
        }
    }
    total / ((n - 1) as f64 * (n - 2) as f64) / n as f64
}

/// Literal enumeration of all shortest s→t paths; returns, per node, the
/// fraction of them passing through it, summed over ordered pairs.
pub fn oracle_betweenness_by_enumeration(adj: &[Vec<usize>]) -> f64 {
    fn extend_path(
        adj: &[Vec<usize>],
        dist: &[Vec<Option<usize>>],
        path: &mut Vec<usize>,
        t: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        let v = *path.last().expect("path starts at s");
        if v == t {
            out.push(path.clone());
            return;
        }
        for &w in &adj[v] {
            let closer = match (dist[w][t], dist[v][t]) {
                (Some(dw), Some(dv)) => dw + 1 == dv,
                _ => false,
            };
            if closer {
                path.push(w);
                extend_path(adj, dist, path, t, out);
                path.pop();
            }
        }
    }

    let n = adj.len();
    if n <= 2 {
        return 0.0;
    }
    let dist = floyd_warshall(adj);
    let mut raw = vec![0f64; n];
    for s in 0..n {
        for t in 0..n {
            if s == t || dist[s][t].is_none() {
                continue;
            }
            let mut paths = Vec::new();
            extend_path(adj, &dist, &mut vec![s], t, &mut paths);
            for path in &paths {
                for &v in &path[1..path.len() - 1] {
                    raw[v] += 1.0 / paths.len() as f64;
                }
            }
        }
    }
    raw.iter().sum::<f64>() / ((n - 1) as f64 * (n - 2) as f64) / n as f64
}

pub fn oracle_transitivity(adj: &[Vec<usize>]) -> f64 {
    let n = adj.len();
    let is_edge = |i: usize, j: usize| adj[i].contains(&j);
    let mut triangles = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if is_edge(i, j) && is_edge(j, k) && is_edge(i, k) {
                    triangles += 1;
                }
            }
        }
    }
    let triads: usize = adj
        .iter()
        .map(|nb| nb.len() * nb.len().saturating_sub(1) / 2)
        .sum();
    if triads == 0 {
        0.0
    } else {
        3.0 * triangles as f64 / triads as f64
    }
}

// ---------------------------------------------------------------------------
// DBSCAN by direct definition: cores, eps-components, borders.
// ---------------------------------------------------------------------------

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub struct DbscanOracle {
    /// ≥ min_pts points (itself included) within eps.
    pub core: Vec<bool>,
    /// eps-component id per core point.
    pub component: Vec<Option<usize>>,
    pub n_components: usize,
}

pub fn oracle_dbscan(points: &[Vec<f64>], eps: f64, min_pts: usize) -> DbscanOracle {
    let n = points.len();
    let core: Vec<bool> = (0..n)
        .map(|i| {
            points
                .iter()
                .filter(|q| distance(&points[i], q) <= eps)
                .count()
                >= min_pts
        })
        .collect();
    let mut component = vec![None; n];
    let mut n_components = 0;
    for start in 0..n {
        if !core[start] || component[start].is_some() {
            continue;
        }
        let id = n_components;
        n_components += 1;
        let mut stack = vec![start];
        component[start] = Some(id);
        while let Some(v) = stack.pop() {
            for u in 0..n {
                if core[u] && component[u].is_none() && distance(&points[v], &points[u]) <= eps {
                    component[u] = Some(id);
                    stack.push(u);
                }
            }
        }
    }
    DbscanOracle {
        core,
        component,
        n_components,
    }
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dims: usize) -> Vec<Vec<f64>> {
    // A few clumps plus uniform background so every eps regime appears.
    let centers: Vec<Vec<f64>> = (0..rng.gen_range(2..=4usize))
        .map(|_| (0..dims).map(|_| rng.gen_range(0.0..10.0)).collect())
        .collect();
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.7) {
                let c = &centers[rng.gen_range(0..centers.len())];
                c.iter().map(|x| x + rng.gen_range(-0.5..0.5)).collect()
            } else {
                (0..dims).map(|_| rng.gen_range(0.0..10.0)).collect()
            }
        })
        .collect()
}

/// Every DBSCAN law the extraction must obey at one eps: cores partition
/// into eps-components, borders take an adjacent core's cluster or stay
/// noise, true noise stays noise, and the cluster count is the component
/// count. Any labeling passing these checks is a legitimate DBSCAN result
/// up to relabeling; border points are the only legitimately ambiguous ones.
pub fn check_extraction(points: &[Vec<f64>], labels: &[i32], eps: f64, min_pts: usize, tag: &str) {
    let oracle = oracle_dbscan(points, eps, min_pts);
    let n = points.len();
    for i in 0..n {
        if oracle.core[i] {
            assert!(labels[i] >= 0, "{tag}: core point {i} labeled noise");
            for j in i + 1..n {
                if oracle.core[j] {
                    assert_eq!(
                        labels[i] == labels[j],
                        oracle.component[i] == oracle.component[j],
                        "{tag}: core pair ({i},{j}) split or merged wrongly"
                    );
                }
            }
        } else {
            let adjacent: BTreeSet<i32> = (0..n)
                .filter(|&j| oracle.core[j] && distance(&points[i], &points[j]) <= eps)
                .map(|j| labels[j])
                .collect();
            if adjacent.is_empty() {
                assert_eq!(labels[i], -1, "{tag}: isolated point {i} must be noise");
            } else if labels[i] >= 0 {
                assert!(
                    adjacent.contains(&labels[i]),
                    "{tag}: border point {i} joined a cluster it cannot reach"
                );
            }
        }
    }
    let observed_clusters = labels
        .iter()
        .filter(|&&l| l >= 0)
        .collect::<BTreeSet<_>>()
        .len();
    assert_eq!(
        observed_clusters, oracle.n_components,
        "{tag}: cluster count vs eps-component count"
    );
}

// ---------------------------------------------------------------------------
// Adjusted Rand Index: O(n²) pair counting with singleton outliers.
// ---------------------------------------------------------------------------

/// ARI via literal pair counting. Outliers are singleton clusters, so an
/// outlier never shares a cluster with anything, including another outlier.
pub fn oracle_ari(a: &[i32], b: &[i32]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let same = |x: &[i32], i: usize, j: usize| x[i] >= 0 && x[i] == x[j];
    let (mut n11, mut n10, mut n01, mut n00) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in i + 1..n {
            match (same(a, i, j), same(b, i, j)) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let denominator = (n11 + n10) * (n10 + n00) + (n11 + n01) * (n01 + n00);
    if denominator == 0.0 {
        1.0
    } else {
        2.0 * (n11 * n00 - n10 * n01) / denominator
    }
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<i32> {
    let clusters = rng.gen_range(1..=5);
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                -1
            } else {
                rng.gen_range(0..clusters)
            }
        })
        .collect()
}
