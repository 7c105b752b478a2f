//! Approximate restricted SSSP on the graph contracted along an approximate topological
//! order.
//!
//! Nodes are the parts of the order. Every ordered pair of nodes joined by at least one
//! edge keeps a queue of those edges keyed by weight. A node's in-neighbors are grouped
//! into buckets by their label gap `χ`; when a node loses its certificate, the repair
//! loop only scans buckets whose index is allowed by the node's current estimate, and
//! otherwise raises the estimate by one.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::error::{Error, Result};
use crate::graph::{vertex_mask, AppliedUpdate, DecrementalGraph, EdgeId, GraphView, Vertex, Weight, INF};
use crate::paths::dijkstra;
use crate::scc_topo::{ordered_components, NodeId, SccTopo, SplitEvent};

/// Gap between the label intervals `[τ(X), τ(X)+|X|)` and `[τ(Y), τ(Y)+|Y|)`.
pub fn chi(topo: &SccTopo, x: NodeId, y: NodeId) -> Result<usize> {
    if x == y {
        return Err(Error::SameNode);
    }
    Ok(interval_gap((topo.tau(x), topo.size(x)), (topo.tau(y), topo.size(y))))
}

pub(crate) fn interval_gap(a: (usize, usize), b: (usize, usize)) -> usize {
    let (lo, hi) = if a.0 < b.0 { (a, b) } else { (b, a) };
    hi.0 - (lo.0 + lo.1 - 1)
}

pub(crate) fn floor_log2(x: usize) -> usize {
    (usize::BITS - 1 - x.leading_zeros()) as usize
}

/// Largest `j` such that some integer in `[lo, hi]` is divisible by `2^j`.
pub fn split_rescan_level(lo: usize, hi: usize) -> usize {
    assert!(1 <= lo && lo <= hi, "empty size range");
    (0..usize::BITS as usize)
        .rev()
        .find(|&j| lo.div_ceil(1 << j).checked_mul(1 << j).is_some_and(|m| m <= hi))
        .unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenseConfig {
    pub delta: Weight,
    /// Public accuracy; the structure runs with `ε/2` internally.
    pub epsilon: f64,
    /// Quality `q` of the order the structure runs on.
    pub quality: f64,
    /// Added to every node estimate to get vertex estimates.
    pub eta: Weight,
    /// Jump straight to the next value at which some in-neighbor could certify, instead
    /// of raising estimates one at a time. Both modes reach the same estimates.
    pub stride: bool,
    /// Maintain distances to the root instead of from it.
    pub reversed: bool,
}

impl DenseConfig {
    pub fn new(delta: Weight, epsilon: f64, quality: f64, eta: Weight) -> Self {
        Self { delta, epsilon, quality, eta, stride: false, reversed: false }
    }

    /// `⌈(1+ε')δ + ε'n/q⌉` with `ε' = ε/2`.
    pub fn delta_max(&self, n: usize) -> Weight {
        let e = self.epsilon / 2.0;
        libm::ceil((1.0 + e) * self.delta as f64 + e * n as f64 / self.quality) as Weight
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DenseCounters {
    /// Bucket members inspected while repairing certificates.
    pub scans: u64,
    /// Nodes taken off the repair queue.
    pub repairs: u64,
    /// Estimate raises.
    pub increments: u64,
    pub splits: u64,
    /// Edges moved between pair queues.
    pub rekeys: u64,
    /// Bucket members re-examined after splits.
    pub bucket_rescans: u64,
    pub bucket_moves: u64,
}

/// A pair `(X, Y)` whose bucket disagrees with the slack rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BucketViolation {
    pub from: Vertex,
    pub to: Vertex,
    pub chi: usize,
    pub bucket: usize,
}

type PairQueue = BTreeSet<(Weight, EdgeId)>;

#[derive(Clone, Debug)]
struct Slot {
    members: Vec<Vertex>,
    tau: usize,
    est: Weight,
    /// Certificate edge into this slot.
    parent: Option<EdgeId>,
    /// Slots whose certificate edge leaves this slot.
    children: BTreeSet<usize>,
    /// `buckets[j]` holds in-neighbor slots filed under level `j`.
    buckets: Vec<BTreeSet<usize>>,
    /// Bucket level of every in-neighbor slot.
    in_level: BTreeMap<usize, usize>,
    out: BTreeSet<usize>,
}

#[derive(Clone, Debug)]
pub struct DenseEngine {
    config: DenseConfig,
    n: usize,
    root: Vertex,
    delta_max: Weight,
    /// `⌈2^j ε'/q⌉` for every bucket level.
    steps: Vec<Weight>,
    levels: usize,
    slots: Vec<Slot>,
    slot_of_vertex: Vec<usize>,
    slot_of_node: Vec<Option<usize>>,
    pairs: BTreeMap<(usize, usize), PairQueue>,
    /// Where each edge is filed: `(tail slot, head slot, key)`.
    filed: Vec<Option<(usize, usize, Weight)>>,
    queue: BTreeSet<(Weight, usize)>,
    counters: DenseCounters,
}

impl DenseEngine {
    /// Builds the node graph over `topo`, runs Dijkstra on it and files in-neighbors into
    /// buckets by their exact gap.
    pub fn new(graph: &DecrementalGraph, topo: &SccTopo, root: Vertex, config: DenseConfig) -> Self {
        let n = graph.n();
        let levels = floor_log2(n.max(1)) + 2;
        let e = config.epsilon / 2.0;
        let steps = (0..levels)
            .map(|j| (libm::ceil(libm::ldexp(e / config.quality, j as i32)) as Weight).max(1))
            .collect();
        let mut engine = Self {
            config,
            n,
            root,
            delta_max: config.delta_max(n),
            steps,
            levels,
            slots: Vec::new(),
            slot_of_vertex: alloc::vec![usize::MAX; n],
            slot_of_node: Vec::new(),
            pairs: BTreeMap::new(),
            filed: alloc::vec![None; graph.initial_edge_count()],
            queue: BTreeSet::new(),
            counters: DenseCounters::default(),
        };
        for (x, tau, members) in topo.ordered_nodes() {
            let s = engine.new_slot(members.to_vec(), tau);
            engine.map_node(x, s);
        }
        for e in 0..graph.initial_edge_count() {
            engine.refile(graph, e);
        }
        engine.initial_tree();
        engine
    }

    /// The DAG configuration: singleton nodes in topological order, `q = n/δ` and no
    /// diameter term. Fails if `graph` has a cycle.
    pub fn dag(graph: &DecrementalGraph, root: Vertex, delta: Weight, epsilon: f64) -> Result<Self> {
        let comps = ordered_components(&graph.view());
        if comps.iter().any(|c| c.len() > 1) {
            return Err(Error::InvalidParameter("graph is not acyclic"));
        }
        let topo = SccTopo::from_ordered(graph.n(), comps);
        let quality = graph.n().max(1) as f64 / delta.max(1) as f64;
        Ok(Self::new(graph, &topo, root, DenseConfig::new(delta, epsilon, quality, 0)))
    }

    fn view<'a>(&self, graph: &'a DecrementalGraph) -> GraphView<'a> {
        if self.config.reversed {
            graph.view().reversed()
        } else {
            graph.view()
        }
    }

    fn new_slot(&mut self, members: Vec<Vertex>, tau: usize) -> usize {
        let id = self.slots.len();
        for &v in &members {
            self.slot_of_vertex[v] = id;
        }
        self.slots.push(Slot {
            members,
            tau,
            est: INF,
            parent: None,
            children: BTreeSet::new(),
            buckets: alloc::vec![BTreeSet::new(); self.levels],
            in_level: BTreeMap::new(),
            out: BTreeSet::new(),
        });
        id
    }

    fn map_node(&mut self, x: NodeId, slot: usize) {
        if self.slot_of_node.len() <= x.index() {
            self.slot_of_node.resize(x.index() + 1, None);
        }
        self.slot_of_node[x.index()] = Some(slot);
    }

    fn gap(&self, a: usize, b: usize) -> usize {
        let (sa, sb) = (&self.slots[a], &self.slots[b]);
        interval_gap((sa.tau, sa.members.len()), (sb.tau, sb.members.len()))
    }

    fn exact_level(&self, from: usize, to: usize) -> usize {
        floor_log2(self.gap(from, to)).min(self.levels - 1)
    }

    fn place(&mut self, from: usize, to: usize, level: usize) {
        if let Some(old) = self.slots[to].in_level.insert(from, level) {
            self.slots[to].buckets[old].remove(&from);
        }
        self.slots[to].buckets[level].insert(from);
    }

    /// Puts `e` into the queue of the pair its endpoints belong to now, or takes it out
    /// if it is dead or internal to a node.
    fn refile(&mut self, graph: &DecrementalGraph, e: EdgeId) {
        let view = self.view(graph);
        let want = view.has_edge(e).then(|| {
            let (t, h) = view.endpoints(e);
            (self.slot_of_vertex[t], self.slot_of_vertex[h], view.weight(e))
        });
        let want = want.filter(|&(a, b, _)| a != b);
        if want == self.filed[e] {
            return;
        }
        self.counters.rekeys += 1;
        if let Some((a, b, w)) = self.filed[e].take() {
            let q = self.pairs.get_mut(&(a, b)).expect("filed edge has a queue");
            q.remove(&(w, e));
            if q.is_empty() {
                self.pairs.remove(&(a, b));
                self.slots[a].out.remove(&b);
                if let Some(level) = self.slots[b].in_level.remove(&a) {
                    self.slots[b].buckets[level].remove(&a);
                }
            }
        }
        if let Some((a, b, w)) = want {
            let q = self.pairs.entry((a, b)).or_default();
            let fresh = q.is_empty();
            q.insert((w, e));
            if fresh {
                self.slots[a].out.insert(b);
                let level = self.exact_level(a, b);
                self.place(a, b, level);
            }
        }
        self.filed[e] = want;
    }

    fn pair_min(&self, from: usize, to: usize) -> Option<(Weight, EdgeId)> {
        self.pairs.get(&(from, to)).and_then(|q| q.first().copied())
    }

    fn initial_tree(&mut self) {
        let r = self.slot_of_vertex[self.root];
        let mut heap = BinaryHeap::new();
        self.slots[r].est = 0;
        heap.push(Reverse((0, r)));
        while let Some(Reverse((d, x))) = heap.pop() {
            if d > self.slots[x].est {
                continue;
            }
            let outs: Vec<usize> = self.slots[x].out.iter().copied().collect();
            for y in outs {
                let (w, e) = self.pair_min(x, y).expect("listed pair has edges");
                let nd = d.saturating_add(w);
                if nd <= self.delta_max && nd < self.slots[y].est {
                    self.slots[y].est = nd;
                    self.set_parent(y, Some(e));
                    heap.push(Reverse((nd, y)));
                }
            }
        }
    }

    fn set_parent(&mut self, y: usize, e: Option<EdgeId>) {
        if let Some((a, _, _)) = self.slots[y].parent.and_then(|old| self.filed[old]) {
            self.slots[a].children.remove(&y);
        }
        self.slots[y].parent = e;
        if let Some(e) = e {
            let (a, _, _) = self.filed[e].expect("certificate edge is filed");
            self.slots[a].children.insert(y);
        }
    }

    fn root_slot(&self) -> usize {
        self.slot_of_vertex[self.root]
    }

    fn enqueue(&mut self, y: usize) {
        if y != self.root_slot() && self.slots[y].est != INF {
            self.queue.insert((self.slots[y].est, y));
        }
    }

    fn certificate_holds(&self, y: usize) -> bool {
        let Some(e) = self.slots[y].parent else { return false };
        let Some((a, b, w)) = self.filed[e] else { return false };
        b == y && self.slots[a].est != INF && self.slots[a].est.saturating_add(w) <= self.slots[y].est
    }

    /// Applies this stage's splits, then the edge update (if any), then repairs.
    pub fn handle_update(&mut self, graph: &DecrementalGraph, update: Option<&AppliedUpdate>, splits: &[SplitEvent]) {
        for ev in splits {
            self.apply_split(graph, ev);
        }
        if let Some(up) = update {
            let e = up.edge;
            let old = self.filed[e];
            self.refile(graph, e);
            if let Some((_, b, _)) = old {
                if self.slots[b].parent == Some(e) && !self.certificate_holds(b) {
                    self.detach(b);
                }
            }
        }
        self.repair();
    }

    /// Drops `y`'s certificate and queues it. Child links are cleaned up lazily.
    fn detach(&mut self, y: usize) {
        self.slots[y].parent = None;
        self.enqueue(y);
    }

    fn apply_split(&mut self, graph: &DecrementalGraph, ev: &SplitEvent) {
        self.counters.splits += 1;
        let p = self.slot_of_node[ev.parent.index()].expect("split of an unknown node");
        let parent_size = self.slots[p].members.len();
        let heir = (0..ev.children.len())
            .max_by_key(|&i| (ev.children[i].members.len(), Reverse(i)))
            .expect("split has children");
        let est = self.slots[p].est;
        let cert = self.slots[p].parent.take();
        let mut child_slots = Vec::with_capacity(ev.children.len());
        for (i, child) in ev.children.iter().enumerate() {
            let s = if i == heir {
                self.slots[p].members = child.members.clone();
                self.slots[p].tau = child.tau;
                p
            } else {
                let s = self.new_slot(child.members.clone(), child.tau);
                self.slots[s].est = est;
                s
            };
            self.map_node(child.node, s);
            child_slots.push(s);
        }
        // Move edges of the smaller children to their new pairs; certificates leaving a
        // moved vertex get linked from its new slot.
        let view = self.view(graph);
        for (i, &s) in child_slots.iter().enumerate() {
            if i == heir {
                continue;
            }
            let members = self.slots[s].members.clone();
            for &x in &members {
                for &e in view.out_ids(x).iter().chain(view.in_ids(x)) {
                    self.refile(graph, e);
                    if let Some((a, b, _)) = self.filed[e] {
                        if self.slots[b].parent == Some(e) {
                            self.slots[a].children.insert(b);
                        }
                    }
                }
            }
        }
        // The child holding the certificate's head keeps it; the others need repair.
        let cert_slot = cert.and_then(|e| self.filed[e]).map(|(a, b, _)| (a, b));
        if let Some((a, c)) = cert_slot {
            self.slots[c].parent = cert;
            self.slots[a].children.insert(c);
            if !self.certificate_holds(c) {
                self.detach(c);
            }
        }
        let root = self.root_slot();
        for &s in &child_slots {
            if s != root && Some(s) != cert_slot.map(|c| c.1) {
                self.detach(s);
            }
        }
        for (i, child) in ev.children.iter().enumerate() {
            let j = split_rescan_level(child.members.len(), parent_size - 1);
            self.rescan_buckets(child_slots[i], j);
        }
    }

    /// Re-files every in-neighbor of `s` at level `≤ j+1`, and `s` itself at every
    /// out-neighbor where it sits at level `≤ j`.
    fn rescan_buckets(&mut self, s: usize, j: usize) {
        let upto = (j + 1).min(self.levels - 1);
        let near: Vec<usize> = self.slots[s].buckets[..=upto].iter().flatten().copied().collect();
        for x in near {
            self.refresh_level(x, s);
        }
        let outs: Vec<usize> = self.slots[s].out.iter().copied().collect();
        for y in outs {
            if self.slots[y].in_level.get(&s).is_some_and(|&l| l <= j) {
                self.refresh_level(s, y);
            }
        }
    }

    fn refresh_level(&mut self, from: usize, to: usize) {
        self.counters.bucket_rescans += 1;
        let level = self.exact_level(from, to);
        if self.slots[to].in_level.get(&from) != Some(&level) {
            self.counters.bucket_moves += 1;
            self.place(from, to, level);
        }
    }

    /// Largest bucket level a node at estimate `est` may scan.
    fn scan_level(&self, est: Weight) -> usize {
        (0..self.levels).rev().find(|&j| est % self.steps[j] == 0).unwrap_or(0)
    }

    /// Smallest value `≥ from` at which level `level` may be scanned.
    fn next_eligible(&self, from: Weight, level: usize) -> Weight {
        self.steps[level..]
            .iter()
            .map(|&s| from.div_ceil(s).saturating_mul(s))
            .min()
            .unwrap_or(INF)
    }

    fn repair(&mut self) {
        while let Some((d, y)) = self.queue.pop_first() {
            if self.slots[y].est != d || self.slots[y].parent.is_some() || y == self.root_slot() {
                continue;
            }
            self.counters.repairs += 1;
            let top = self.scan_level(d);
            let mut witness = None;
            'scan: for level in 0..=top {
                for &x in &self.slots[y].buckets[level] {
                    self.counters.scans += 1;
                    let (w, e) = self.pair_min(x, y).expect("bucket member has edges");
                    let ex = self.slots[x].est;
                    if ex != INF && ex.saturating_add(w) <= d {
                        witness = Some(e);
                        break 'scan;
                    }
                }
            }
            if let Some(e) = witness {
                self.set_parent(y, Some(e));
                continue;
            }
            let next = if self.config.stride { self.next_candidate(y, d) } else { d + 1 };
            let next = if d >= self.delta_max || next > self.delta_max { INF } else { next };
            self.counters.increments += 1;
            self.slots[y].est = next;
            self.enqueue(y);
            let children: Vec<usize> = core::mem::take(&mut self.slots[y].children).into_iter().collect();
            for z in children {
                let linked = self.slots[z].parent.and_then(|e| self.filed[e]).is_some_and(|(a, _, _)| a == y);
                if !linked {
                    continue;
                }
                if self.certificate_holds(z) {
                    self.slots[y].children.insert(z);
                } else {
                    self.detach(z);
                }
            }
        }
    }

    /// Smallest value above `d` at which some in-neighbor's current estimate could
    /// certify `y` from a bucket that value may scan.
    fn next_candidate(&self, y: usize, d: Weight) -> Weight {
        let mut best = INF;
        for (level, bucket) in self.slots[y].buckets.iter().enumerate() {
            for &x in bucket {
                let ex = self.slots[x].est;
                if ex == INF {
                    continue;
                }
                let (w, _) = self.pair_min(x, y).expect("bucket member has edges");
                let at = self.next_eligible(ex.saturating_add(w).max(d + 1), level);
                best = best.min(at);
            }
        }
        best
    }

    pub fn config(&self) -> &DenseConfig {
        &self.config
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn delta_max(&self) -> Weight {
        self.delta_max
    }

    pub fn counters(&self) -> DenseCounters {
        self.counters
    }

    /// Estimate of the node containing `v`, without the diameter term.
    pub fn node_estimate(&self, v: Vertex) -> Weight {
        self.slots[self.slot_of_vertex[v]].est
    }

    /// Estimate of `dist(root, v)` (or `dist(v, root)` when reversed).
    pub fn query(&self, v: Vertex) -> Weight {
        let est = self.node_estimate(v);
        if est == INF {
            INF
        } else {
            est.saturating_add(self.config.eta)
        }
    }

    /// Every pair of nodes joined by an edge must sit in the bucket of its gap or the one
    /// below it.
    pub fn audit_buckets(&self) -> core::result::Result<(), BucketViolation> {
        for &(a, b) in self.pairs.keys() {
            let chi = self.gap(a, b);
            let exact = self.exact_level(a, b);
            let level = self.slots[b].in_level.get(&a).copied();
            let ok = level.is_some_and(|l| l == exact || l + 1 == exact)
                && level.is_some_and(|l| self.slots[b].buckets[l].contains(&a));
            if !ok {
                return Err(BucketViolation {
                    from: self.slots[a].members[0],
                    to: self.slots[b].members[0],
                    chi,
                    bucket: level.unwrap_or(usize::MAX),
                });
            }
        }
        Ok(())
    }

    /// Node path from the tree and a vertex path realizing it, with intra-node segments
    /// filled in by Dijkstra inside each node. For reversed engines the vertex path runs
    /// from `v` to the root in the original orientation.
    pub fn path(&self, graph: &DecrementalGraph, v: Vertex) -> Result<(Vec<Vertex>, Vec<Vertex>)> {
        if self.node_estimate(v) == INF {
            return Err(Error::NoPath(v));
        }
        let mut tree_edges = Vec::new();
        let mut s = self.slot_of_vertex[v];
        let root = self.root_slot();
        while s != root {
            let e = self.slots[s].parent.ok_or(Error::NoPath(v))?;
            tree_edges.push(e);
            s = self.filed[e].ok_or(Error::NoPath(v))?.0;
            if tree_edges.len() > self.slots.len() {
                return Err(Error::NoPath(v));
            }
        }
        tree_edges.reverse();
        let view = self.view(graph);
        let mut nodes = alloc::vec![self.slots[root].members[0]];
        let mut walk = alloc::vec![self.root];
        let mut at = self.root;
        for &e in tree_edges.iter().chain(core::iter::once(&usize::MAX)) {
            let (target, next) = if e == usize::MAX { (v, None) } else {
                let (t, h) = view.endpoints(e);
                (t, Some(h))
            };
            let mask = vertex_mask(self.n, &self.slots[self.slot_of_vertex[at]].members);
            let inner = graph.induced(&mask);
            let inner = if self.config.reversed { inner.reversed() } else { inner };
            let sp = dijkstra(&inner, at, INF);
            let seg = sp.path_to(&inner, target).ok_or(Error::NoPath(v))?;
            walk.extend_from_slice(&seg[1..]);
            if let Some(h) = next {
                walk.push(h);
                nodes.push(self.slots[self.slot_of_vertex[h]].members[0]);
                at = h;
            }
        }
        if self.config.reversed {
            walk.reverse();
        }
        Ok((nodes, walk))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::UpdateEvent;

    #[test]
    fn gaps() {
        assert_eq!(interval_gap((0, 3), (5, 1)), 3);
        assert_eq!(interval_gap((0, 2), (2, 4)), 1);
        assert_eq!(interval_gap((5, 1), (0, 3)), 3);
        let topo = SccTopo::from_ordered(2, alloc::vec![alloc::vec![0], alloc::vec![1]]);
        assert_eq!(chi(&topo, topo.node_of(0), topo.node_of(0)), Err(Error::SameNode));
    }

    #[test]
    fn rescan_levels() {
        assert_eq!(split_rescan_level(3, 7), 2);
        assert_eq!(split_rescan_level(5, 7), 1);
        assert_eq!(split_rescan_level(1, 1), 0);
        assert_eq!(split_rescan_level(4, 8), 3);
    }

    #[test]
    fn coarse_steps_are_exact_when_one() {
        let g = DecrementalGraph::new(32, &[(0, 1, 1)]).unwrap();
        let topo = SccTopo::singletons(&g.view());
        let e = DenseEngine::new(&g, &topo, 0, DenseConfig::new(4, 1.0, 50.0, 0));
        assert_eq!(e.steps[4], 1);
    }

    #[test]
    fn dag_path_updates() {
        let mut g = DecrementalGraph::new(4, &[(0, 1, 1), (1, 2, 1), (0, 2, 5), (2, 3, 1)]).unwrap();
        let mut e = DenseEngine::dag(&g, 0, 8, 0.25).unwrap();
        assert_eq!((0..4).map(|v| e.query(v)).collect::<Vec<_>>(), [0, 1, 2, 3]);
        let up = g.apply_update(UpdateEvent::delete(1, 2)).unwrap();
        e.handle_update(&g, Some(&up), &[]);
        assert!(e.query(2) >= 5 && e.query(3) >= 6);
        assert!(e.audit_buckets().is_ok());
        let (_, walk) = e.path(&g, 3).unwrap();
        assert_eq!(walk, [0, 2, 3]);
        let up = g.apply_update(UpdateEvent::delete(0, 2)).unwrap();
        e.handle_update(&g, Some(&up), &[]);
        assert_eq!(e.query(3), INF);
        assert!(DenseEngine::dag(&DecrementalGraph::new(2, &[(0, 1, 1), (1, 0, 1)]).unwrap(), 0, 4, 0.5).is_err());
    }
}
