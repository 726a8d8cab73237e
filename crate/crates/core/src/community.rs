//! Community detection on activity graphs: weighted Louvain over the
//! undirected view, followed by a repair pass that keeps transaction nodes
//! off community boundaries (every transaction must retain at least one
//! payer and one payee inside its own community).

use crate::graph::{ActivityGraph, NodeId, NodeKind};
use crate::Scalar;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CommunityError {
    #[error("modularity undefined: graph has no edges")]
    NoEdges,
    #[error("partition covers {got} nodes but the graph has {want}")]
    PartitionMismatch { got: usize, want: usize },
    #[error("transaction node \"{0}\" has no payer or no payee anywhere in the graph")]
    UnanchoredTransaction(String),
}

#[derive(Debug, Clone, Copy)]
pub struct LouvainConfig<S> {
    pub resolution: S,
    /// Minimum total modularity gain for a level to be worth another round.
    pub threshold: S,
}

impl<S: Scalar> Default for LouvainConfig<S> {
    fn default() -> Self {
        LouvainConfig {
            resolution: S::one(),
            threshold: S::from_f64(1e-7).expect("threshold representable"),
        }
    }
}

/// A node → community assignment with its modularity score.
/// Community ids are dense `0..n_communities`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<S> {
    assignment: Vec<usize>,
    n_communities: usize,
    pub modularity: S,
}

impl<S: Scalar> Partition<S> {
    fn new(assignment: Vec<usize>, modularity: S) -> Self {
        let n_communities = assignment.iter().copied().max().map_or(0, |m| m + 1);
        Partition {
            assignment,
            n_communities,
            modularity,
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_of(&self, node: NodeId) -> usize {
        self.assignment[node as usize]
    }

    pub fn n_communities(&self) -> usize {
        self.n_communities
    }

    /// Members per community id, each list ascending by node id.
    pub fn communities(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.n_communities];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node as NodeId);
        }
        out
    }
}

/// Undirected weighted working graph. Unlike `ActivityGraph` it permits
/// self-loops, which Louvain's aggregation step produces.
struct WorkGraph<S> {
    adj: Vec<BTreeMap<usize, S>>,
    loops: Vec<S>,
    /// Total weight m: each undirected edge once, each self-loop once.
    total: S,
}

impl<S: Scalar> WorkGraph<S> {
    fn from_activity(graph: &ActivityGraph) -> Self {
        let n = graph.node_count();
        let mut wg = WorkGraph {
            adj: vec![BTreeMap::new(); n],
            loops: vec![S::zero(); n],
            total: S::zero(),
        };
        for (u, v, w) in graph.undirected_edges() {
            let w = S::from_sat(w);
            wg.adj[u as usize].insert(v as usize, w);
            wg.adj[v as usize].insert(u as usize, w);
            wg.total += w;
        }
        wg
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Weighted degree: incident edge weights, self-loops counted twice.
    fn degree(&self, v: usize) -> S {
        let two = S::from_count(2);
        self.adj[v].values().fold(S::zero(), |a, &w| a + w) + two * self.loops[v]
    }

    /// Collapses communities into supernodes; internal weight becomes the
    /// supernode's self-loop. Total weight is preserved.
    fn aggregate(&self, assignment: &[usize], n_communities: usize) -> WorkGraph<S> {
        let mut agg = WorkGraph {
            adj: vec![BTreeMap::new(); n_communities],
            loops: vec![S::zero(); n_communities],
            total: self.total,
        };
        for v in 0..self.len() {
            let cv = assignment[v];
            agg.loops[cv] += self.loops[v];
            for (&u, &w) in &self.adj[v] {
                if u < v {
                    continue; // each undirected edge once
                }
                let cu = assignment[u];
                if cu == cv {
                    agg.loops[cv] += w;
                } else {
                    *agg.adj[cv].entry(cu).or_insert_with(S::zero) += w;
                    *agg.adj[cu].entry(cv).or_insert_with(S::zero) += w;
                }
            }
        }
        agg
    }
}

fn modularity_of<S: Scalar>(
    wg: &WorkGraph<S>,
    assignment: &[usize],
    resolution: S,
) -> Result<S, CommunityError> {
    if wg.total <= S::zero() {
        return Err(CommunityError::NoEdges);
    }
    let n_communities = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut internal = vec![S::zero(); n_communities];
    let mut degree_sum = vec![S::zero(); n_communities];
    for v in 0..wg.len() {
        let cv = assignment[v];
        internal[cv] += wg.loops[v];
        degree_sum[cv] += wg.degree(v);
        for (&u, &w) in &wg.adj[v] {
            if u > v && assignment[u] == cv {
                internal[cv] += w;
            }
        }
    }
    let two_m = S::from_count(2) * wg.total;
    let mut q = S::zero();
    for c in 0..n_communities {
        let share = degree_sum[c] / two_m;
        q += internal[c] / wg.total - resolution * share * share;
    }
    Ok(q)
}

/// Modularity Q of a partition over the undirected weighted view of `graph`:
/// Q = Σ_c [Σ_in_c/(2m) − γ·(Σ_tot_c/(2m))²].
pub fn modularity<S: Scalar>(
    graph: &ActivityGraph,
    assignment: &[usize],
    resolution: S,
) -> Result<S, CommunityError> {
    if assignment.len() != graph.node_count() {
        return Err(CommunityError::PartitionMismatch {
            got: assignment.len(),
            want: graph.node_count(),
        });
    }
    modularity_of(&WorkGraph::from_activity(graph), assignment, resolution)
}

/// One Louvain local-move phase. Nodes are visited in ascending id order,
/// a move needs strictly positive gain, and gain ties go to the lowest
/// community id, so the phase is fully deterministic.
fn local_moves<S: Scalar>(wg: &WorkGraph<S>, resolution: S) -> (Vec<usize>, usize, bool) {
    let n = wg.len();
    let two_m = S::from_count(2) * wg.total;
    let degrees: Vec<S> = (0..n).map(|v| wg.degree(v)).collect();
    let mut community: Vec<usize> = (0..n).collect();
    let mut degree_sum: Vec<S> = degrees.clone();
    let mut moved_any = false;
    loop {
        let mut moved_this_sweep = false;
        for v in 0..n {
            let home = community[v];
            degree_sum[home] -= degrees[v];
            // Weight from v to each adjacent community, plus the home
            // community so "stay" competes on equal terms.
            let mut links: BTreeMap<usize, S> = BTreeMap::new();
            links.insert(home, S::zero());
            for (&u, &w) in &wg.adj[v] {
                *links.entry(community[u]).or_insert_with(S::zero) += w;
            }
            let gain = |c: usize, link: S| link - resolution * degree_sum[c] * degrees[v] / two_m;
            let mut best = home;
            let mut best_gain = gain(home, links[&home]);
            for (&c, &link) in &links {
                let g = gain(c, link);
                if g > best_gain || (g == best_gain && c < best) {
                    best = c;
                    best_gain = g;
                }
            }
            if best != home {
                moved_this_sweep = true;
                moved_any = true;
            }
            community[v] = best;
            degree_sum[best] += degrees[v];
        }
        if !moved_this_sweep {
            break;
        }
    }
    let (dense, count) = densify(&community);
    (dense, count, moved_any)
}

/// Renumbers arbitrary community ids to `0..count`, preserving the relative
/// order of the original ids.
fn densify(assignment: &[usize]) -> (Vec<usize>, usize) {
    let distinct: BTreeSet<usize> = assignment.iter().copied().collect();
    let remap: BTreeMap<usize, usize> = distinct.into_iter().zip(0..).collect();
    let dense: Vec<usize> = assignment.iter().map(|c| remap[c]).collect();
    (dense, remap.len())
}

/// Two-phase weighted Louvain on the undirected view of `graph`.
/// Deterministic by construction; levels repeat until total modularity gain
/// drops to `cfg.threshold` or below.
pub fn louvain_partition<S: Scalar>(
    graph: &ActivityGraph,
    cfg: &LouvainConfig<S>,
) -> Result<Partition<S>, CommunityError> {
    let n = graph.node_count();
    let mut wg = WorkGraph::from_activity(graph);
    if wg.total <= S::zero() {
        return Err(CommunityError::NoEdges);
    }
    let mut assignment: Vec<usize> = (0..n).collect();
    let mut current_q = modularity_of(&wg, &(0..wg.len()).collect::<Vec<_>>(), cfg.resolution)?;
    loop {
        let (level, n_communities, moved) = local_moves(&wg, cfg.resolution);
        if !moved {
            break;
        }
        for slot in assignment.iter_mut() {
            *slot = level[*slot];
        }
        let new_q = modularity_of(&wg, &level, cfg.resolution)?;
        let gained = new_q - current_q;
        current_q = new_q;
        if gained <= cfg.threshold {
            break;
        }
        wg = wg.aggregate(&level, n_communities);
    }
    let (dense, _) = densify(&assignment);
    let q = modularity(graph, &dense, cfg.resolution)?;
    Ok(Partition::new(dense, q))
}

/// Transaction nodes whose community gives them no internal payer or no
/// internal payee, ascending by node id.
pub fn boundary_violations(graph: &ActivityGraph, assignment: &[usize]) -> Vec<NodeId> {
    graph
        .node_ids()
        .filter(|&t| graph.kind(t) == NodeKind::Transaction)
        .filter(|&t| {
            let c = assignment[t as usize];
            let internal =
                |edges: &[(NodeId, u64)]| edges.iter().any(|&(u, _)| assignment[u as usize] == c);
            !internal(graph.in_edges(t)) || !internal(graph.out_edges(t))
        })
        .collect()
}

/// Per-community weights of the given edge list, heaviest-then-lowest-id first.
fn community_weights(edges: &[(NodeId, u64)], assignment: &[usize]) -> BTreeMap<usize, u64> {
    let mut weights: BTreeMap<usize, u64> = BTreeMap::new();
    for &(u, w) in edges {
        *weights.entry(assignment[u as usize]).or_insert(0) += w;
    }
    weights
}

fn heaviest(weights: &BTreeMap<usize, u64>) -> Option<usize> {
    weights
        .iter()
        .max_by(|a, b| (a.1, std::cmp::Reverse(a.0)).cmp(&(b.1, std::cmp::Reverse(b.0))))
        .map(|(&c, _)| c)
}

/// Repairs a partition so every transaction node keeps at least one payer
/// and one payee inside its community.
///
/// A violating transaction moves to the adjacent community with the largest
/// total incident weight among those holding neighbors on BOTH of its sides
/// (ties → lowest community id). When no community holds both sides, the
/// heaviest payer-side and payee-side communities are merged instead —
/// reassignment alone cannot satisfy the constraint in that case. Because
/// the graph is bipartite, moving one transaction never changes another
/// transaction's internal degrees, and merges only turn external edges
/// internal, so a bounded number of passes reaches a fixpoint.
pub fn enforce_address_boundaries<S: Scalar>(
    graph: &ActivityGraph,
    partition: &Partition<S>,
    cfg: &LouvainConfig<S>,
) -> Result<Partition<S>, CommunityError> {
    if partition.assignment.len() != graph.node_count() {
        return Err(CommunityError::PartitionMismatch {
            got: partition.assignment.len(),
            want: graph.node_count(),
        });
    }
    let mut assignment = partition.assignment.clone();
    let bound = graph.transaction_count() * (partition.n_communities() + 1) + 2;
    for _ in 0..bound {
        let violators = boundary_violations(graph, &assignment);
        if violators.is_empty() {
            let (dense, _) = densify(&assignment);
            let q = modularity(graph, &dense, cfg.resolution)?;
            return Ok(Partition::new(dense, q));
        }
        for t in violators {
            let c = assignment[t as usize];
            let in_w = community_weights(graph.in_edges(t), &assignment);
            let out_w = community_weights(graph.out_edges(t), &assignment);
            if in_w.contains_key(&c) && out_w.contains_key(&c) {
                continue; // an earlier merge in this pass already fixed it
            }
            if in_w.is_empty() || out_w.is_empty() {
                return Err(CommunityError::UnanchoredTransaction(
                    graph.node(t).name.clone(),
                ));
            }
            let both: BTreeMap<usize, u64> = in_w
                .iter()
                .filter(|(c, _)| out_w.contains_key(c))
                .map(|(&c, &w)| (c, w + out_w[&c]))
                .collect();
            if let Some(best) = heaviest(&both) {
                assignment[t as usize] = best;
            } else {
                let payer_side = heaviest(&in_w).expect("nonempty");
                let payee_side = heaviest(&out_w).expect("nonempty");
                let keep = payer_side.min(payee_side);
                let fold = payer_side.max(payee_side);
                for slot in assignment.iter_mut() {
                    if *slot == fold {
                        *slot = keep;
                    }
                }
                assignment[t as usize] = keep;
            }
        }
    }
    unreachable!("boundary repair failed to reach a fixpoint within its bound");
}

/// One detected community: the induced subgraph plus its coordinates.
#[derive(Debug, Clone)]
pub struct Community {
    pub graph_id: usize,
    pub community_id: usize,
    pub subgraph: ActivityGraph,
}

impl Community {
    pub fn n_nodes(&self) -> usize {
        self.subgraph.node_count()
    }

    pub fn n_addresses(&self) -> usize {
        self.subgraph.address_count()
    }

    pub fn n_transactions(&self) -> usize {
        self.subgraph.transaction_count()
    }
}

/// Runs detection plus repair on every graph and returns all communities,
/// ordered by (graph id, community id). Edgeless graphs (isolated seeds)
/// fall back to one singleton community per node; singleton address-only
/// communities are retained.
pub fn extract_communities<S: Scalar>(
    graphs: &[ActivityGraph],
    cfg: &LouvainConfig<S>,
) -> Result<Vec<Community>, CommunityError> {
    let mut out = Vec::new();
    for (graph_id, graph) in graphs.iter().enumerate() {
        let assignment = if graph.edge_count() == 0 {
            (0..graph.node_count()).collect()
        } else {
            let partition = louvain_partition(graph, cfg)?;
            enforce_address_boundaries(graph, &partition, cfg)?
                .assignment
                .to_vec()
        };
        let mut members: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
        for (node, &c) in assignment.iter().enumerate() {
            members.entry(c).or_default().insert(node as NodeId);
        }
        for (community_id, nodes) in members {
            out.push(Community {
                graph_id,
                community_id,
                subgraph: graph.induced_subgraph(&nodes),
            });
        }
    }
    Ok(out)
}
