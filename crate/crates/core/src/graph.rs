//! Address-transaction graph construction.
//!
//! The graph is directed and strictly bipartite: an `address → tx` edge means
//! the address funds the transaction, a `tx → address` edge means the
//! transaction pays the address. Edge weights are satoshi amounts. Graphs are
//! grown by breadth-first exploration from seed addresses, where one step
//! consumes one transaction node in either direction (so an n-step path has at
//! most 2n edges), and seed territories that touch are merged into one graph.

use crate::ingest::{EntityLabel, LabelDirectory, SeedSet, TxRecord};
use std::collections::{BTreeMap, BTreeSet, HashMap};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Address,
    Transaction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub label: Option<EntityLabel>,
    pub seed_id: Option<u32>,
}

/// Bidirectional transaction lookup: which transactions an address funds
/// (forward) and which pay it (backward). Lists are sorted by
/// `(height, txid)` so iteration order never depends on input order.
#[derive(Debug, Default)]
pub struct TxIndex {
    records: Vec<TxRecord>,
    by_txid: HashMap<String, usize>,
    forward: HashMap<String, Vec<usize>>,
    backward: HashMap<String, Vec<usize>>,
}

impl TxIndex {
    pub fn records(&self) -> &[TxRecord] {
        &self.records
    }

    pub fn record(&self, txid: &str) -> Option<&TxRecord> {
        self.by_txid.get(txid).map(|&i| &self.records[i])
    }

    /// Transactions spending from `address`, as txids in (height, txid) order.
    pub fn spending_from(&self, address: &str) -> impl Iterator<Item = &TxRecord> {
        self.forward
            .get(address)
            .into_iter()
            .flatten()
            .map(|&i| &self.records[i])
    }

    /// Transactions paying to `address`, as txids in (height, txid) order.
    pub fn paying_to(&self, address: &str) -> impl Iterator<Item = &TxRecord> {
        self.backward
            .get(address)
            .into_iter()
            .flatten()
            .map(|&i| &self.records[i])
    }

    fn adjacent(&self, address: &str) -> Vec<usize> {
        let mut txs: Vec<usize> = self
            .forward
            .get(address)
            .into_iter()
            .chain(self.backward.get(address))
            .flatten()
            .copied()
            .collect();
        txs.sort_unstable();
        txs.dedup();
        txs
    }
}

/// Builds the forward/backward indices over a validated record list.
pub fn index_transactions(records: Vec<TxRecord>) -> TxIndex {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        (records[a].height, &records[a].txid).cmp(&(records[b].height, &records[b].txid))
    });
    let mut index = TxIndex {
        by_txid: records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.txid.clone(), i))
            .collect(),
        records,
        ..TxIndex::default()
    };
    for &i in &order {
        let record = &index.records[i];
        for (address, _) in &record.inputs {
            let list = index.forward.entry(address.clone()).or_default();
            if list.last() != Some(&i) {
                list.push(i);
            }
        }
        for (address, _) in &record.outputs {
            let list = index.backward.entry(address.clone()).or_default();
            if list.last() != Some(&i) {
                list.push(i);
            }
        }
    }
    index
}

#[derive(Debug, Clone, Copy)]
pub struct BuildConfig {
    /// Exploration budget in transaction hops per direction from each seed.
    pub n: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig { n: 2 }
    }
}

/// One directed bipartite activity graph. Node ids are dense and assigned in
/// insertion order, which construction keeps deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActivityGraph {
    nodes: Vec<Node>,
    out_edges: Vec<Vec<(NodeId, u64)>>,
    in_edges: Vec<Vec<(NodeId, u64)>>,
    address_ids: HashMap<String, NodeId>,
    tx_ids: HashMap<String, NodeId>,
    seed_ids: BTreeSet<u32>,
}

impl ActivityGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().enumerate().map(|(i, n)| (i as NodeId, n))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.nodes.len() as NodeId
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id as usize].kind
    }

    pub fn address_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Address)
            .count()
    }

    pub fn transaction_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Transaction)
            .count()
    }

    /// Out-edges of `id`, sorted by target node id.
    pub fn out_edges(&self, id: NodeId) -> &[(NodeId, u64)] {
        &self.out_edges[id as usize]
    }

    /// In-edges of `id`, sorted by source node id.
    pub fn in_edges(&self, id: NodeId) -> &[(NodeId, u64)] {
        &self.in_edges[id as usize]
    }

    /// All directed edges in (source, target) order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, u64)> + '_ {
        self.node_ids()
            .flat_map(move |u| self.out_edges(u).iter().map(move |&(v, w)| (u, v, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    /// Neighbors in the undirected view, deduplicated, ascending.
    pub fn undirected_neighbors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .out_edges(id)
            .iter()
            .map(|&(v, _)| v)
            .chain(self.in_edges(id).iter().map(|&(v, _)| v))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Undirected weighted edges: opposite-direction weights between the same
    /// pair are summed; yielded once per unordered pair `(min, max, weight)`.
    pub fn undirected_edges(&self) -> Vec<(NodeId, NodeId, u64)> {
        let mut acc: BTreeMap<(NodeId, NodeId), u64> = BTreeMap::new();
        for (u, v, w) in self.edges() {
            let key = if u <= v { (u, v) } else { (v, u) };
            *acc.entry(key).or_insert(0) += w;
        }
        acc.into_iter().map(|((u, v), w)| (u, v, w)).collect()
    }

    pub fn find_address(&self, address: &str) -> Option<NodeId> {
        self.address_ids.get(address).copied()
    }

    pub fn find_transaction(&self, txid: &str) -> Option<NodeId> {
        self.tx_ids.get(txid).copied()
    }

    /// Seed ids contained in this graph, ascending.
    pub fn seed_ids(&self) -> &BTreeSet<u32> {
        &self.seed_ids
    }

    pub fn ensure_address(&mut self, address: &str) -> NodeId {
        if let Some(&id) = self.address_ids.get(address) {
            return id;
        }
        let id = self.push_node(Node {
            name: address.to_string(),
            kind: NodeKind::Address,
            label: None,
            seed_id: None,
        });
        self.address_ids.insert(address.to_string(), id);
        id
    }

    pub fn ensure_transaction_node(&mut self, txid: &str) -> NodeId {
        self.ensure_transaction(txid)
    }

    /// Adds a directed flow edge. Panics if the endpoints are of the same
    /// kind (the graph is strictly bipartite) or the amount is zero.
    pub fn add_flow(&mut self, from: NodeId, to: NodeId, amount: u64) {
        assert_ne!(
            self.kind(from),
            self.kind(to),
            "flow edges must connect an address and a transaction"
        );
        assert!(amount > 0, "flow edges carry positive amounts");
        self.add_edge(from, to, amount);
    }

    fn ensure_transaction(&mut self, txid: &str) -> NodeId {
        if let Some(&id) = self.tx_ids.get(txid) {
            return id;
        }
        let id = self.push_node(Node {
            name: txid.to_string(),
            kind: NodeKind::Transaction,
            label: None,
            seed_id: None,
        });
        self.tx_ids.insert(txid.to_string(), id);
        id
    }

    fn push_node(&mut self, node: Node) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.out_edges.push(Vec::new());
        self.in_edges.push(Vec::new());
        id
    }

    fn add_edge(&mut self, from: NodeId, to: NodeId, amount: u64) {
        debug_assert_ne!(
            self.kind(from),
            self.kind(to),
            "bipartite invariant: {from} -> {to}"
        );
        match self.out_edges[from as usize].binary_search_by_key(&to, |&(v, _)| v) {
            Ok(pos) => self.out_edges[from as usize][pos].1 += amount,
            Err(pos) => self.out_edges[from as usize].insert(pos, (to, amount)),
        }
        match self.in_edges[to as usize].binary_search_by_key(&from, |&(v, _)| v) {
            Ok(pos) => self.in_edges[to as usize][pos].1 += amount,
            Err(pos) => self.in_edges[to as usize].insert(pos, (from, amount)),
        }
    }

    /// Inserts a transaction with all its input and output addresses.
    /// Repeated occurrences of one address on one side collapse into a single
    /// edge with the amounts summed; zero-amount entries carry no flow and
    /// add the address node but no edge.
    pub fn insert_transaction(&mut self, record: &TxRecord) -> NodeId {
        let tx = self.ensure_transaction(&record.txid);
        for (address, amount) in &record.inputs {
            let a = self.ensure_address(address);
            if *amount > 0 {
                self.add_edge(a, tx, *amount);
            }
        }
        for (address, amount) in &record.outputs {
            let a = self.ensure_address(address);
            if *amount > 0 {
                self.add_edge(tx, a, *amount);
            }
        }
        tx
    }

    fn mark_seed(&mut self, address: &str, seed_id: u32) {
        let id = self.ensure_address(address);
        self.nodes[id as usize].seed_id = Some(seed_id);
        self.seed_ids.insert(seed_id);
    }

    /// Attaches entity labels to matching address nodes.
    pub fn attach_labels(&mut self, labels: &LabelDirectory) {
        for node in &mut self.nodes {
            if node.kind == NodeKind::Address {
                node.label = labels.lookup(&node.name).cloned();
            }
        }
    }

    /// Induced subgraph on `members`: keeps exactly the edges with both
    /// endpoints inside, preserving names, kinds, labels and seed marks.
    /// New node ids follow ascending old-id order.
    pub fn induced_subgraph(&self, members: &BTreeSet<NodeId>) -> ActivityGraph {
        let mut sub = ActivityGraph::new();
        let mut remap: HashMap<NodeId, NodeId> = HashMap::new();
        for &old in members {
            let node = self.node(old).clone();
            let new = sub.push_node(node.clone());
            match node.kind {
                NodeKind::Address => {
                    sub.address_ids.insert(node.name.clone(), new);
                }
                NodeKind::Transaction => {
                    sub.tx_ids.insert(node.name.clone(), new);
                }
            }
            if let Some(seed_id) = node.seed_id {
                sub.seed_ids.insert(seed_id);
            }
            remap.insert(old, new);
        }
        for &old in members {
            for &(to, w) in self.out_edges(old) {
                if let Some(&new_to) = remap.get(&to) {
                    sub.add_edge(remap[&old], new_to, w);
                }
            }
        }
        sub
    }
}

/// Nodes (as tx-index keys) reached from `seed` within `n` transaction hops.
/// A hop consumes one transaction in either spend or payout direction and
/// exposes all of its input and output addresses.
fn explore(index: &TxIndex, seed: &str, n: usize) -> (BTreeSet<usize>, BTreeSet<String>) {
    let mut txs: BTreeSet<usize> = BTreeSet::new();
    let mut addresses: BTreeSet<String> = BTreeSet::new();
    addresses.insert(seed.to_string());
    let mut frontier: Vec<String> = vec![seed.to_string()];
    for _ in 0..n {
        let mut next: BTreeSet<String> = BTreeSet::new();
        for address in &frontier {
            for tx in index.adjacent(address) {
                if !txs.insert(tx) {
                    continue;
                }
                let record = &index.records()[tx];
                for (a, _) in record.inputs.iter().chain(&record.outputs) {
                    if addresses.insert(a.clone()) {
                        next.insert(a.clone());
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next.into_iter().collect();
    }
    (txs, addresses)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            self.parent[x] = self.find(self.parent[x]);
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Lower root wins, keeping group representatives deterministic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Explores every seed, merges territories that share any node, and returns
/// one graph per merged group, ordered by smallest contained seed id.
///
/// A discovered seed address inside another seed's territory shares at least
/// itself with that territory, so the fresh-budget re-seed rule reduces to:
/// every seed explores at full budget, and overlapping explorations merge.
pub fn build_graphs(
    index: &TxIndex,
    seeds: &SeedSet,
    labels: &LabelDirectory,
    cfg: &BuildConfig,
) -> Vec<ActivityGraph> {
    assert!(cfg.n >= 1, "exploration depth must be at least 1");
    let explorations: Vec<(u32, &str, BTreeSet<usize>, BTreeSet<String>)> = seeds
        .iter()
        .map(|(id, address)| {
            let (txs, addresses) = explore(index, address, cfg.n);
            (id, address, txs, addresses)
        })
        .collect();

    let mut uf = UnionFind::new(explorations.len());
    let mut tx_owner: HashMap<usize, usize> = HashMap::new();
    let mut address_owner: HashMap<&str, usize> = HashMap::new();
    for (i, (_, _, txs, addresses)) in explorations.iter().enumerate() {
        for &tx in txs {
            match tx_owner.get(&tx) {
                Some(&j) => uf.union(i, j),
                None => {
                    tx_owner.insert(tx, i);
                }
            }
        }
        for address in addresses {
            match address_owner.get(address.as_str()) {
                Some(&j) => uf.union(i, j),
                None => {
                    address_owner.insert(address, i);
                }
            }
        }
    }

    // Group explorations by union-find root; seed order within a group and
    // group order both follow ascending seed id because explorations do.
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..explorations.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }

    let mut graphs = Vec::with_capacity(groups.len());
    for members in groups.values() {
        let mut graph = ActivityGraph::new();
        let mut txs: BTreeSet<usize> = BTreeSet::new();
        for &m in members {
            txs.extend(&explorations[m].2);
        }
        let mut order: Vec<usize> = txs.into_iter().collect();
        order.sort_by(|&a, &b| {
            let ra = &index.records()[a];
            let rb = &index.records()[b];
            (ra.height, &ra.txid).cmp(&(rb.height, &rb.txid))
        });
        for tx in order {
            graph.insert_transaction(&index.records()[tx]);
        }
        for &m in members {
            let (seed_id, address, _, _) = explorations[m];
            graph.mark_seed(address, seed_id);
        }
        graph.attach_labels(labels);
        graphs.push(graph);
    }
    graphs
}

/// How seeds distributed over the built graphs.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct MergeReport {
    /// Count of contained seed ids per graph, in graph order.
    pub seeds_per_graph: Vec<usize>,
    /// Histogram: seeds-per-graph value → number of graphs with that value.
    pub histogram: BTreeMap<usize, usize>,
}

impl MergeReport {
    pub fn total_seeds(&self) -> usize {
        self.seeds_per_graph.iter().sum()
    }
}

pub fn merge_report(graphs: &[ActivityGraph]) -> MergeReport {
    let seeds_per_graph: Vec<usize> = graphs.iter().map(|g| g.seed_ids().len()).collect();
    let mut histogram = BTreeMap::new();
    for &count in &seeds_per_graph {
        *histogram.entry(count).or_insert(0) += 1;
    }
    MergeReport {
        seeds_per_graph,
        histogram,
    }
}
