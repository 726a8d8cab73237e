//! HDBSCAN: hierarchical density clustering that tunes the radius by itself.
//!
//! Pipeline: mutual-reachability distances → minimum spanning tree →
//! single-linkage dendrogram → condensation (minimum cluster size bound to
//! `min_pts`) → excess-of-mass cluster selection. The tree root competes in
//! the selection like any other cluster, so a uniformly dense point set
//! yields one cluster rather than all noise. Input order never affects the
//! partition: internally the points are processed in a canonical order.

use super::{core_distances, euclidean, ClusterAssignment};
use crate::Scalar;
use std::cmp::Ordering;

/// λ difference that treats equal endpoints (including ∞ − ∞) as zero, so
/// zero-distance merges cannot poison stability sums with NaN.
fn lambda_gap<S: Scalar>(high: S, low: S) -> S {
    if high == low {
        S::zero()
    } else {
        high - low
    }
}

/// Dense Prim MST over the implicit mutual-reachability graph.
/// Ties fall to the smallest point index, so the tree is deterministic.
fn mst_edges<S: Scalar, P: AsRef<[S]>>(points: &[P], core: &[S]) -> Vec<(usize, usize, S)> {
    let n = points.len();
    let mutual = |a: usize, b: usize| {
        let d = euclidean(points[a].as_ref(), points[b].as_ref());
        core[a].max(core[b]).max(d)
    };
    let mut in_tree = vec![false; n];
    in_tree[0] = true;
    let mut best: Vec<(S, usize)> = (0..n).map(|v| (mutual(0, v), 0)).collect();
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let next = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].0.partial_cmp(&best[b].0).expect("no NaN"))
            .expect("an unattached point remains");
        edges.push((best[next].1, next, best[next].0));
        in_tree[next] = true;
        for v in 0..n {
            if !in_tree[v] {
                let d = mutual(next, v);
                if d < best[v].0 {
                    best[v] = (d, next);
                }
            }
        }
    }
    edges
}

/// Internal dendrogram node: children are node ids (< n for points),
/// `dist` the merge distance, `size` the merged leaf count.
struct Merge<S> {
    left: usize,
    right: usize,
    dist: S,
    size: usize,
}

/// Agglomerates MST edges in ascending weight order into a dendrogram.
/// Merge node ids start at `n`; the last one is the root.
fn single_linkage<S: Scalar>(mst: &[(usize, usize, S)], n: usize) -> Vec<Merge<S>> {
    let mut edges: Vec<(usize, usize, S)> = mst.to_vec();
    edges.sort_by(|a, b| {
        a.2.partial_cmp(&b.2)
            .expect("no NaN")
            .then(a.0.min(a.1).cmp(&b.0.min(b.1)))
            .then(a.0.max(a.1).cmp(&b.0.max(b.1)))
    });
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            parent[x] = find(parent, parent[x]);
        }
        parent[x]
    }
    let mut cluster_of_root: Vec<usize> = (0..n).collect();
    let mut sizes: Vec<usize> = vec![1; n];
    let mut merges: Vec<Merge<S>> = Vec::with_capacity(edges.len());
    for (u, v, dist) in edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        debug_assert_ne!(ru, rv, "MST edges never close a cycle");
        let (cu, cv) = (cluster_of_root[ru], cluster_of_root[rv]);
        let id = n + merges.len();
        merges.push(Merge {
            left: cu.min(cv),
            right: cu.max(cv),
            dist,
            size: sizes[ru] + sizes[rv],
        });
        parent[rv] = ru;
        sizes[ru] += sizes[rv];
        cluster_of_root[ru] = id;
    }
    merges
}

struct CondensedTree<S> {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    stability: Vec<S>,
    /// Condensed cluster each point fell out of.
    point_cluster: Vec<usize>,
}

/// Walks the dendrogram top-down. Sides smaller than `min_cluster_size`
/// fall out of the current condensed cluster at the split's λ = 1/distance;
/// splits where both sides are large enough spawn two child clusters.
fn condense<S: Scalar>(merges: &[Merge<S>], n: usize, min_cluster_size: usize) -> CondensedTree<S> {
    let size_of = |node: usize| if node < n { 1 } else { merges[node - n].size };
    let mut tree = CondensedTree {
        parent: vec![None],
        children: vec![Vec::new()],
        stability: vec![S::zero()],
        point_cluster: vec![0; n],
    };
    // (dendrogram node, condensed cluster it belongs to, cluster birth λ)
    let root = n + merges.len() - 1;
    let mut work: Vec<(usize, usize, S)> = vec![(root, 0, S::zero())];
    let mut leaves_scratch: Vec<usize> = Vec::new();
    while let Some((start, cluster, birth)) = work.pop() {
        let mut node = start;
        loop {
            debug_assert!(node >= n, "descent only enters sides of size >= 2");
            let merge = &merges[node - n];
            let lambda = S::one() / merge.dist;
            let (sl, sr) = (size_of(merge.left), size_of(merge.right));
            if sl >= min_cluster_size && sr >= min_cluster_size {
                // Both sides persist: the cluster ends in a true split.
                tree.stability[cluster] += S::from_count(sl + sr) * lambda_gap(lambda, birth);
                for child_node in [merge.left, merge.right] {
                    let child = tree.parent.len();
                    tree.parent.push(Some(cluster));
                    tree.children.push(Vec::new());
                    tree.stability.push(S::zero());
                    tree.children[cluster].push(child);
                    work.push((child_node, child, lambda));
                }
                break;
            }
            let mut fall_out = |side: usize, tree: &mut CondensedTree<S>| {
                leaves_scratch.clear();
                leaves_scratch.push(side);
                while let Some(x) = leaves_scratch.pop() {
                    if x < n {
                        tree.point_cluster[x] = cluster;
                        tree.stability[cluster] += lambda_gap(lambda, birth);
                    } else {
                        leaves_scratch.push(merges[x - n].left);
                        leaves_scratch.push(merges[x - n].right);
                    }
                }
            };
            if sl >= min_cluster_size {
                fall_out(merge.right, &mut tree);
                node = merge.left;
            } else if sr >= min_cluster_size {
                fall_out(merge.left, &mut tree);
                node = merge.right;
            } else {
                // Cluster dissolves: everything left falls out here.
                fall_out(merge.left, &mut tree);
                fall_out(merge.right, &mut tree);
                break;
            }
        }
    }
    tree
}

/// Excess-of-mass selection: a cluster beats its descendants when its own
/// stability reaches the best sum its child subtrees can offer. Clusters
/// with zero stability (points fell out the instant they were born) are
/// never selected.
fn select_clusters<S: Scalar>(tree: &CondensedTree<S>) -> Vec<bool> {
    let k = tree.stability.len();
    let mut best = vec![S::zero(); k];
    let mut selected = vec![false; k];
    for c in (0..k).rev() {
        let child_sum = tree.children[c]
            .iter()
            .fold(S::zero(), |acc, &ch| acc + best[ch]);
        if tree.stability[c] >= child_sum && tree.stability[c] > S::zero() {
            selected[c] = true;
            best[c] = tree.stability[c];
        } else {
            best[c] = child_sum;
        }
    }
    // Keep only the topmost selected cluster on every root-to-leaf path.
    let mut shadowed = vec![false; k];
    for c in 0..k {
        if let Some(p) = tree.parent[c] {
            shadowed[c] = shadowed[p] || selected[p];
        }
        if shadowed[c] {
            selected[c] = false;
        }
    }
    selected
}

/// Lexicographic coordinate order; panics on NaN like the rest of the module.
fn lex_cmp<S: Scalar>(a: &[S], b: &[S]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("no NaN coordinates") {
            Ordering::Equal => continue,
            unequal => return unequal,
        }
    }
    a.len().cmp(&b.len())
}

/// Clusters `points` with mutual-reachability density, `min_pts` doubling as
/// the minimum cluster size. Points in no selected cluster come back as −1.
///
/// Mutual-reachability distances tie by construction — a point's core
/// distance is itself a pair distance and dominates every nearer pair — and
/// tied tree edges fall to the smaller point index. To keep the result a
/// function of the point *set*, the pipeline runs in lexicographic coordinate
/// order and the labels are scattered back to the caller's positions.
pub fn hdbscan<S: Scalar, P: AsRef<[S]> + Sync>(points: &[P], min_pts: usize) -> ClusterAssignment {
    assert!(min_pts >= 2, "min_pts must be at least 2");
    let n = points.len();
    if n < min_pts {
        return ClusterAssignment::from_labels(vec![-1; n]);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lex_cmp(points[a].as_ref(), points[b].as_ref()));
    let sorted: Vec<&P> = order.iter().map(|&i| &points[i]).collect();
    let core = core_distances(&sorted, min_pts);
    let mst = mst_edges(&sorted, &core);
    let merges = single_linkage(&mst, n);
    let tree = condense(&merges, n, min_pts);
    let selected = select_clusters(&tree);
    let mut labels = vec![-1; n];
    for (pos, &original) in order.iter().enumerate() {
        let mut cluster = Some(tree.point_cluster[pos]);
        while let Some(c) = cluster {
            if selected[c] {
                labels[original] = c as i32;
                break;
            }
            cluster = tree.parent[c];
        }
    }
    ClusterAssignment::from_labels(labels)
}
