//! Recurring-topology mining: canonical structure signatures, predominant
//! topology per cluster, pass-through motif detection, and entity profiles.

use crate::community::Community;
use crate::graph::{ActivityGraph, NodeKind};
use crate::ingest::Category;
use crate::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};

/// Nodes above this count skip exact canonicalization: the certificate is
/// then a color-refinement hash only, and inequality no longer proves
/// non-isomorphism.
const EXACT_NODE_LIMIT: usize = 30;
/// Safety valve for the exact search on pathologically symmetric graphs.
const LEAF_BUDGET: usize = 50_000;

/// Canonical certificate of a community's directed bipartite structure
/// (node kinds as colors, amounts ignored). Equal for isomorphic
/// communities; unequal certificates prove non-isomorphism only when both
/// came from the exact path (`exact == true`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Signature {
    /// `n_addresses:n_transactions:sha256(structure)`, all hex.
    pub certificate: String,
    pub exact: bool,
}

struct StructureView {
    kinds: Vec<u8>,
    ins: Vec<Vec<usize>>,
    outs: Vec<Vec<usize>>,
}

impl StructureView {
    fn of(graph: &ActivityGraph) -> Self {
        let n = graph.node_count();
        let mut view = StructureView {
            kinds: graph
                .nodes()
                .map(|(_, node)| match node.kind {
                    NodeKind::Address => 0,
                    NodeKind::Transaction => 1,
                })
                .collect(),
            ins: vec![Vec::new(); n],
            outs: vec![Vec::new(); n],
        };
        for (u, v, _) in graph.edges() {
            view.outs[u as usize].push(v as usize);
            view.ins[v as usize].push(u as usize);
        }
        view
    }

    fn len(&self) -> usize {
        self.kinds.len()
    }

    /// One refinement fixpoint: nodes are recolored by (color, in-neighbor
    /// color multiset, out-neighbor color multiset) until the class count
    /// stops growing. Class ids are canonical (sorted by signature), so
    /// isomorphic graphs refine to the same coloring up to isomorphism.
    fn refine(&self, colors: &[usize]) -> Vec<usize> {
        let mut colors = colors.to_vec();
        let mut classes = colors.iter().collect::<BTreeSet<_>>().len();
        loop {
            let mut sigs: Vec<(usize, Vec<usize>, Vec<usize>)> = (0..self.len())
                .map(|v| {
                    let mut ins: Vec<usize> = self.ins[v].iter().map(|&u| colors[u]).collect();
                    let mut outs: Vec<usize> = self.outs[v].iter().map(|&u| colors[u]).collect();
                    ins.sort_unstable();
                    outs.sort_unstable();
                    (colors[v], ins, outs)
                })
                .collect();
            let mut distinct: Vec<_> = sigs.clone();
            distinct.sort();
            distinct.dedup();
            let rank: BTreeMap<_, usize> = distinct.into_iter().zip(0..).collect();
            let new_classes = rank.len();
            for (v, sig) in sigs.drain(..).enumerate() {
                colors[v] = rank[&sig];
            }
            if new_classes == classes {
                return colors;
            }
            classes = new_classes;
        }
    }

    /// Adjacency encoding under a discrete coloring (a full ordering).
    fn encode(&self, colors: &[usize]) -> Vec<u8> {
        let n = self.len();
        let mut order = vec![0usize; n];
        for (v, &c) in colors.iter().enumerate() {
            order[c] = v;
        }
        let mut bytes = Vec::with_capacity(n + n * n / 8 + 1);
        for &v in &order {
            bytes.push(self.kinds[v]);
        }
        let mut position = vec![0usize; n];
        for (pos, &v) in order.iter().enumerate() {
            position[v] = pos;
        }
        let mut bits = vec![0u8; (n * n).div_ceil(8)];
        for (v, outs) in self.outs.iter().enumerate() {
            for &u in outs {
                let bit = position[v] * n + position[u];
                bits[bit / 8] |= 1 << (bit % 8);
            }
        }
        bytes.extend(bits);
        bytes
    }

    /// Invariant (but not complete) encoding for the refinement-only path:
    /// one record per refined class, in canonical class order.
    fn encode_refined(&self, colors: &[usize]) -> Vec<u8> {
        let mut per_class: BTreeMap<usize, (usize, u8, Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for v in 0..self.len() {
            let entry = per_class.entry(colors[v]).or_insert_with(|| {
                let mut ins: Vec<usize> = self.ins[v].iter().map(|&u| colors[u]).collect();
                let mut outs: Vec<usize> = self.outs[v].iter().map(|&u| colors[u]).collect();
                ins.sort_unstable();
                outs.sort_unstable();
                (0, self.kinds[v], ins, outs)
            });
            entry.0 += 1;
        }
        let mut bytes = Vec::new();
        for (color, (size, kind, ins, outs)) in per_class {
            for value in [color, size, kind as usize, ins.len(), outs.len()] {
                bytes.extend((value as u32).to_be_bytes());
            }
            for c in ins.iter().chain(&outs) {
                bytes.extend((*c as u32).to_be_bytes());
            }
        }
        bytes
    }
}

/// Individualization-refinement search for the lexicographically smallest
/// adjacency encoding. Branches only inside the first non-singleton refined
/// class, and tries one representative per set of twins (vertices with
/// identical neighborhoods are automorphic, so one branch covers them all).
struct Canonizer<'a> {
    view: &'a StructureView,
    best: Option<Vec<u8>>,
    leaves: usize,
}

impl<'a> Canonizer<'a> {
    fn search(&mut self, colors: &[usize]) -> bool {
        if self.leaves > LEAF_BUDGET {
            return false;
        }
        let colors = self.view.refine(colors);
        let n = self.view.len();
        let classes = colors.iter().collect::<BTreeSet<_>>().len();
        if classes == n {
            self.leaves += 1;
            let encoding = self.view.encode(&colors);
            if self.best.as_ref().is_none_or(|b| encoding < *b) {
                self.best = Some(encoding);
            }
            return true;
        }
        let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &c) in colors.iter().enumerate() {
            members.entry(c).or_default().push(v);
        }
        let cell = members
            .into_iter()
            .find(|(_, m)| m.len() > 1)
            .expect("non-discrete coloring has a multi-member class")
            .1;
        let mut seen_twins: BTreeSet<(&[usize], &[usize])> = BTreeSet::new();
        for &v in &cell {
            let key = (self.view.ins[v].as_slice(), self.view.outs[v].as_slice());
            if !seen_twins.insert(key) {
                continue;
            }
            let mut branched: Vec<usize> = colors.iter().map(|&c| c * 2 + 2).collect();
            branched[v] -= 1;
            if !self.search(&branched) {
                return false;
            }
        }
        true
    }
}

fn certificate(n_addresses: usize, n_transactions: usize, body: &[u8]) -> String {
    let digest = Sha256::digest(body);
    format!(
        "{n_addresses:04x}:{n_transactions:04x}:{}",
        hex::encode(digest)
    )
}

/// Canonical structure signature of any activity graph.
pub fn graph_signature(graph: &ActivityGraph) -> Signature {
    let view = StructureView::of(graph);
    let initial: Vec<usize> = view.kinds.iter().map(|&k| k as usize).collect();
    let n_addresses = graph.address_count();
    let n_transactions = graph.transaction_count();
    if view.len() <= EXACT_NODE_LIMIT {
        let mut canonizer = Canonizer {
            view: &view,
            best: None,
            leaves: 0,
        };
        if canonizer.search(&initial) {
            let body = canonizer.best.expect("search visited at least one leaf");
            return Signature {
                certificate: certificate(n_addresses, n_transactions, &body),
                exact: true,
            };
        }
    }
    let refined = view.refine(&initial);
    Signature {
        certificate: certificate(n_addresses, n_transactions, &view.encode_refined(&refined)),
        exact: false,
    }
}

pub fn canonical_signature(community: &Community) -> Signature {
    graph_signature(&community.subgraph)
}

/// Groups a cluster's communities by signature and returns the largest
/// class: (signature, member count, exemplar). Ties go to the
/// lexicographically smallest certificate; the exemplar is the member with
/// the smallest (graph id, community id).
pub fn predominant_topology<'a>(
    members: &[&'a Community],
) -> Option<(Signature, usize, &'a Community)> {
    let signatures: Vec<Signature> = members
        .par_iter()
        .map(|community| canonical_signature(community))
        .collect();
    let mut groups: BTreeMap<&Signature, Vec<&'a Community>> = BTreeMap::new();
    for (signature, &community) in signatures.iter().zip(members) {
        groups.entry(signature).or_default().push(community);
    }
    let mut winner: Option<(&Signature, usize, &'a Community)> = None;
    for (signature, group) in &groups {
        let exemplar = group
            .iter()
            .min_by_key(|c| (c.graph_id, c.community_id))
            .expect("groups are never empty");
        if winner.is_none_or(|(_, count, _)| group.len() > count) {
            winner = Some((signature, group.len(), exemplar));
        }
    }
    winner.map(|(s, count, exemplar)| (s.clone(), count, exemplar))
}

/// One side's dominant flow: the heaviest single edge and its share of the
/// side's total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dominant<S> {
    pub address: String,
    pub amount: u64,
    pub share: S,
}

/// A matched pass-through: two chained transactions bridged by exactly two
/// addresses, with one dominant amount flowing in and out nearly unsplit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassThroughReport<S> {
    pub tx1: String,
    pub tx2: String,
    pub bridges: Vec<String>,
    pub dominant_input: Dominant<S>,
    pub dominant_output: Dominant<S>,
    pub input_is_exchange: bool,
    pub output_is_exchange: bool,
}

/// Heaviest edge of a list; ties go to the lowest node id (lists are sorted
/// by node id, and only strictly heavier edges displace the running best).
fn heaviest_edge(edges: &[(crate::graph::NodeId, u64)]) -> Option<(crate::graph::NodeId, u64)> {
    let mut best: Option<(crate::graph::NodeId, u64)> = None;
    for &(node, amount) in edges {
        if best.is_none_or(|(_, b)| amount > b) {
            best = Some((node, amount));
        }
    }
    best
}

/// Matches the two-transaction pass-through shape: exactly 2 transaction
/// nodes, exactly 2 distinct bridge addresses on tx1→addr→tx2 paths (none
/// in the reverse direction), and a dominant input into tx1 and output out
/// of tx2 with shares ≥ `theta`. Exchange flags come from attached labels.
pub fn detect_passthrough<S: Scalar>(
    community: &Community,
    theta: S,
) -> Option<PassThroughReport<S>> {
    assert!(
        theta > S::from_f64(0.5).unwrap() && theta <= S::one(),
        "dominance threshold must lie in (0.5, 1]"
    );
    let graph = &community.subgraph;
    let txs: Vec<_> = graph
        .node_ids()
        .filter(|&id| graph.kind(id) == NodeKind::Transaction)
        .collect();
    let [ta, tb] = txs.as_slice() else {
        return None;
    };
    let bridges_between = |from: crate::graph::NodeId, to: crate::graph::NodeId| {
        graph
            .out_edges(from)
            .iter()
            .filter(|&&(addr, _)| graph.out_edges(addr).iter().any(|&(next, _)| next == to))
            .map(|&(addr, _)| addr)
            .collect::<Vec<_>>()
    };
    let forward = bridges_between(*ta, *tb);
    let backward = bridges_between(*tb, *ta);
    let (tx1, tx2, bridges) = match (forward.len(), backward.len()) {
        (2, 0) => (*ta, *tb, forward),
        (0, 2) => (*tb, *ta, backward),
        _ => return None,
    };
    let share_of = |edges: &[(crate::graph::NodeId, u64)]| {
        let total: u64 = edges.iter().map(|&(_, w)| w).sum();
        let (node, amount) = heaviest_edge(edges)?;
        Some((node, amount, S::from_sat(amount) / S::from_sat(total)))
    };
    let (in_node, in_amount, in_share) = share_of(graph.in_edges(tx1))?;
    let (out_node, out_amount, out_share) = share_of(graph.out_edges(tx2))?;
    if in_share < theta || out_share < theta {
        return None;
    }
    let is_exchange = |node: crate::graph::NodeId| {
        graph
            .node(node)
            .label
            .as_ref()
            .is_some_and(|l| l.category == Category::Exchange)
    };
    Some(PassThroughReport {
        tx1: graph.node(tx1).name.clone(),
        tx2: graph.node(tx2).name.clone(),
        bridges: bridges
            .iter()
            .map(|&b| graph.node(b).name.clone())
            .collect(),
        dominant_input: Dominant {
            address: graph.node(in_node).name.clone(),
            amount: in_amount,
            share: in_share,
        },
        dominant_output: Dominant {
            address: graph.node(out_node).name.clone(),
            amount: out_amount,
            share: out_share,
        },
        input_is_exchange: is_exchange(in_node),
        output_is_exchange: is_exchange(out_node),
    })
}

/// Distinct labeled addresses per category, per cluster id (including −1).
/// An address appearing in several communities of one cluster counts once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntityProfile {
    pub per_cluster: BTreeMap<i32, BTreeMap<Category, usize>>,
}

pub fn entity_profile(
    communities: &[Community],
    assignment: &crate::clustering::ClusterAssignment,
) -> EntityProfile {
    assert_eq!(communities.len(), assignment.len());
    let mut seen: BTreeMap<i32, BTreeMap<Category, BTreeSet<&str>>> = BTreeMap::new();
    for (community, &cluster) in communities.iter().zip(assignment.labels()) {
        let bucket = seen.entry(cluster).or_default();
        for (_, node) in community.subgraph.nodes() {
            if let Some(label) = &node.label {
                bucket
                    .entry(label.category)
                    .or_default()
                    .insert(node.name.as_str());
            }
        }
    }
    EntityProfile {
        per_cluster: seen
            .into_iter()
            .map(|(cluster, by_category)| {
                let counts = by_category
                    .into_iter()
                    .map(|(category, addresses)| (category, addresses.len()))
                    .collect();
                (cluster, counts)
            })
            .collect(),
    }
}
