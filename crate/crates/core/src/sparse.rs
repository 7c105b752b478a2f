//! Approximate restricted SSSP for sparse graphs.
//!
//! Every structure here works on the graph contracted along an approximate topological
//! order, kept as a multigraph. A [`GesTree`] maintains hop-bounded distances from one
//! node with Bellman–Ford layers whose values are rounded up to a geometric grid, so each
//! entry changes only a logarithmic number of times. Shortcut levels run one such tree
//! per sampled vertex inside a window of nearby labels and turn short sample-to-sample
//! distances into shortcut arcs; the final tree runs from the root over the graph plus
//! all shortcuts.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::dense::{interval_gap, DenseCounters};
use crate::error::{Error, Result};
use crate::graph::{AppliedUpdate, DecrementalGraph, EdgeId, Vertex, Weight, INF};
use crate::rng::{chance, Rng};
use crate::scc_topo::{NodeId, SccTopo, SplitEvent};

const NONE: usize = usize::MAX;

/// Largest distance between points of the label intervals of `x` and `y`.
pub fn chi_far(topo: &SccTopo, x: NodeId, y: NodeId) -> Result<usize> {
    if x == y {
        return Err(Error::SameNode);
    }
    Ok(far_gap((topo.tau(x), topo.size(x)), (topo.tau(y), topo.size(y))))
}

fn far_gap(a: (usize, usize), b: (usize, usize)) -> usize {
    let (lo, hi) = if a.0 < b.0 { (a, b) } else { (b, a) };
    hi.0 - lo.0 + hi.1 - 1
}

/// Nodes whose labels lie within `radius` of the node of `center`. The closed ball
/// measures the nearest label gap, the open ball the farthest. The center's own node
/// belongs to both.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopoBall {
    pub center: Vertex,
    pub radius: usize,
    pub closed: Vec<NodeId>,
    pub open: Vec<NodeId>,
}

impl TopoBall {
    pub fn around(topo: &SccTopo, center: Vertex, radius: usize) -> Self {
        let c = topo.node_of(center);
        let ci = (topo.tau(c), topo.size(c));
        let mut closed = Vec::new();
        let mut open = Vec::new();
        for (y, tau, members) in topo.ordered_nodes() {
            let yi = (tau, members.len());
            if y == c || interval_gap(ci, yi) <= radius {
                closed.push(y);
            }
            if y == c || far_gap(ci, yi) <= radius {
                open.push(y);
            }
        }
        Self { center, radius, closed, open }
    }
}

/// `⌈n^{1/3}⌉`.
pub fn cbrt_ceil(n: usize) -> usize {
    let n = n as u128;
    let mut k = libm::cbrt(n as f64) as u128;
    while k * k * k < n {
        k += 1;
    }
    while k > 0 && (k - 1) * (k - 1) * (k - 1) >= n {
        k -= 1;
    }
    k as usize
}

/// `⌈⌈n^{2/3}⌉ · ln n⌉`: the hop cap of the root tree and the smallest hop count that
/// gets a shortcut level.
pub fn hop_threshold(n: usize) -> usize {
    let two_thirds = cbrt_ceil(n.saturating_mul(n));
    libm::ceil(two_thirds as f64 * libm::log(n.max(1) as f64)) as usize
}

/// Hop reach of the sample trees for hop count `hops`: `⌈hops / ⌈n^{1/3}⌉⌉`.
pub fn level_reach(n: usize, hops: usize) -> usize {
    hops.div_ceil(cbrt_ceil(n).max(1))
}

/// Parameters of one shortcut level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelParams {
    pub level: usize,
    /// Hop count `2^level` this level serves.
    pub hops: usize,
    /// Hop cap of the sample trees, which is also the largest shortcut weight.
    pub reach: usize,
    /// Label radius of the sample trees: `⌈qδ / n^{1/3}⌉`.
    pub radius: usize,
    pub probability: f64,
}

impl LevelParams {
    /// `None` when the level is empty, i.e. `2^level` is below [`hop_threshold`].
    pub fn new(n: usize, level: usize, quality: f64, delta: Weight, c: f64) -> Option<Self> {
        let hops = 1usize.checked_shl(level as u32)?;
        if hops < hop_threshold(n) {
            return None;
        }
        let reach = level_reach(n, hops).max(1);
        let radius = libm::ceil(quality * delta as f64 / cbrt_ceil(n).max(1) as f64) as usize;
        let probability = (3.0 * (c + 6.0) * libm::log(n as f64) / reach as f64).min(1.0);
        Some(Self { level, hops, reach, radius, probability })
    }
}

/// A shortcut arc between two sampled vertices. Deleted shortcuts have weight `INF`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shortcut {
    pub level: usize,
    pub tail: Vertex,
    pub head: Vertex,
    pub weight: Weight,
}

#[derive(Clone, Debug, Default)]
struct Shortcuts {
    arcs: Vec<Shortcut>,
    incident: Vec<Vec<usize>>,
}

impl Shortcuts {
    fn new(n: usize) -> Self {
        Self { arcs: Vec::new(), incident: alloc::vec![Vec::new(); n] }
    }

    fn push(&mut self, s: Shortcut) -> usize {
        let id = self.arcs.len();
        self.incident[s.tail].push(id);
        self.incident[s.head].push(id);
        self.arcs.push(s);
        id
    }
}

/// Arc ids are edge ids for graph edges and `m + k` for shortcut `k`. Graph edges are
/// flipped in reversed mode; shortcuts are already built in the tree's orientation.
#[derive(Clone, Copy)]
struct Arcs<'a> {
    graph: &'a DecrementalGraph,
    shortcuts: Option<&'a Shortcuts>,
    reversed: bool,
}

impl Arcs<'_> {
    fn get(&self, a: usize) -> Option<(Vertex, Vertex, Weight)> {
        let m = self.graph.initial_edge_count();
        if a < m {
            let e = self.graph.edge(a);
            if !e.is_live() {
                return None;
            }
            Some(if self.reversed { (e.head, e.tail, e.weight) } else { (e.tail, e.head, e.weight) })
        } else {
            let s = self.shortcuts?.arcs.get(a - m)?;
            (s.weight != INF).then_some((s.tail, s.head, s.weight))
        }
    }

    fn incident(&self, v: Vertex, out: &mut Vec<usize>) {
        out.extend_from_slice(self.graph.out_ids(v));
        out.extend_from_slice(self.graph.in_ids(v));
        if let Some(s) = self.shortcuts {
            let m = self.graph.initial_edge_count();
            out.extend(s.incident[v].iter().map(|k| m + k));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GesConfig {
    pub hops: usize,
    pub depth: Weight,
    pub epsilon: f64,
    /// Label radius of the host window; `None` hosts every node.
    pub radius: Option<usize>,
    /// Maintain distances to the source instead of from it.
    pub reversed: bool,
}

impl GesConfig {
    pub fn new(hops: usize, depth: Weight, epsilon: f64) -> Self {
        Self { hops, depth, epsilon, radius: None, reversed: false }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GesCounters {
    /// Node pairs inspected while recomputing layer values.
    pub scans: u64,
    pub recomputes: u64,
    /// Layer values raised.
    pub changes: u64,
    /// Arcs filed, moved or unfiled.
    pub touches: u64,
    /// Touched arcs with no endpoint in the open window.
    pub touches_outside_open: u64,
    /// Touched arcs with no endpoint in the closed window; always zero.
    pub touches_outside_closed: u64,
    pub splits: u64,
}

impl core::ops::AddAssign for GesCounters {
    fn add_assign(&mut self, o: Self) {
        self.scans += o.scans;
        self.recomputes += o.recomputes;
        self.changes += o.changes;
        self.touches += o.touches;
        self.touches_outside_open += o.touches_outside_open;
        self.touches_outside_closed += o.touches_outside_closed;
        self.splits += o.splits;
    }
}

type PairQueue = BTreeSet<(Weight, usize)>;

#[derive(Clone, Debug)]
struct Slot {
    members: Vec<Vertex>,
    tau: usize,
    active: bool,
    /// `dist[j]`: rounded estimate using at most `j` hops.
    dist: Vec<Weight>,
    ins: BTreeMap<usize, PairQueue>,
    out: BTreeSet<usize>,
}

/// Hop-bounded distance estimates from the node of a source vertex over the contracted
/// multigraph, optionally restricted to a window of labels around the source.
///
/// Estimates never fall below the distance in the host and stay within `1+ε` of the
/// hop-bounded distance in the host while that is at most the depth.
#[derive(Clone, Debug)]
pub struct GesTree {
    config: GesConfig,
    source: Vertex,
    hops: usize,
    cap: Weight,
    exact_limit: Weight,
    grid: Vec<Weight>,
    slots: Vec<Slot>,
    slot_of_vertex: Vec<usize>,
    slot_of_node: Vec<usize>,
    filed: BTreeMap<usize, (usize, usize, Weight)>,
    work: BTreeSet<(usize, usize)>,
    changed: BTreeSet<usize>,
    unfiling: bool,
    counters: GesCounters,
}

impl GesTree {
    /// A tree on the graph contracted along `topo`.
    pub fn build(graph: &DecrementalGraph, topo: &SccTopo, source: Vertex, config: GesConfig) -> Self {
        let arcs = Arcs { graph, shortcuts: None, reversed: config.reversed };
        Self::with_arcs(arcs, topo, source, config)
    }

    fn with_arcs(arcs: Arcs<'_>, topo: &SccTopo, source: Vertex, config: GesConfig) -> Self {
        let n = arcs.graph.n();
        let sx = topo.node_of(source);
        let si = (topo.tau(sx), topo.size(sx));
        let mut tree = Self {
            config,
            source,
            hops: 0,
            cap: 0,
            exact_limit: 0,
            grid: Vec::new(),
            slots: Vec::new(),
            slot_of_vertex: alloc::vec![NONE; n],
            slot_of_node: Vec::new(),
            filed: BTreeMap::new(),
            work: BTreeSet::new(),
            changed: BTreeSet::new(),
            unfiling: false,
            counters: GesCounters::default(),
        };
        for (x, tau, members) in topo.ordered_nodes() {
            let inside = x == sx || config.radius.is_none_or(|k| interval_gap(si, (tau, members.len())) <= k);
            if inside {
                let s = tree.new_slot(members.to_vec(), tau, Vec::new());
                tree.map_node(x, s);
            }
        }
        // Nodes only split, so the hosted vertex count bounds the node count for good.
        let hosted: usize = tree.slots.iter().map(|s| s.members.len()).sum();
        tree.hops = config.hops.min(hosted.saturating_sub(1));
        tree.set_rounding();
        let h = tree.hops;
        let src = tree.source_slot();
        for (s, slot) in tree.slots.iter_mut().enumerate() {
            slot.dist = alloc::vec![if s == src { 0 } else { INF }; h + 1];
        }
        let mut buf = Vec::new();
        for s in 0..tree.slots.len() {
            for i in 0..tree.slots[s].members.len() {
                buf.clear();
                arcs.incident(tree.slots[s].members[i], &mut buf);
                for &a in &buf {
                    tree.refile(arcs, a);
                }
            }
        }
        tree.initial_layers();
        tree.changed.clear();
        tree
    }

    /// Values up to `⌈4h/ε⌉` are exact; above that the grid grows by `1+ε/(4h)` per
    /// step, so every rounding costs at most a factor `1+ε/(2h)` and `h` of them stay
    /// within `1+ε`.
    fn set_rounding(&mut self) {
        let h = self.hops.max(1) as f64;
        let eps = self.config.epsilon;
        self.cap = libm::floor((1.0 + eps) * self.config.depth as f64).min(INF as f64 / 2.0) as Weight;
        self.exact_limit = libm::ceil(4.0 * h / eps) as Weight;
        let base = 1.0 + eps / (4.0 * h);
        let mut g = self.exact_limit;
        while g < self.cap {
            g = (g + 1).max(libm::ceil(g as f64 * base) as Weight);
            self.grid.push(g);
        }
    }

    fn round(&self, x: Weight) -> Weight {
        if x <= self.exact_limit {
            return if x > self.cap { INF } else { x };
        }
        let i = self.grid.partition_point(|&g| g < x);
        match self.grid.get(i) {
            Some(&g) if g <= self.cap => g,
            _ => INF,
        }
    }

    fn new_slot(&mut self, members: Vec<Vertex>, tau: usize, dist: Vec<Weight>) -> usize {
        let id = self.slots.len();
        for &v in &members {
            self.slot_of_vertex[v] = id;
        }
        self.slots.push(Slot { members, tau, active: true, dist, ins: BTreeMap::new(), out: BTreeSet::new() });
        id
    }

    fn map_node(&mut self, x: NodeId, s: usize) {
        if self.slot_of_node.len() <= x.index() {
            self.slot_of_node.resize(x.index() + 1, NONE);
        }
        self.slot_of_node[x.index()] = s;
    }

    fn source_slot(&self) -> usize {
        self.slot_of_vertex[self.source]
    }

    fn interval(&self, s: usize) -> (usize, usize) {
        (self.slots[s].tau, self.slots[s].members.len())
    }

    fn in_window(&self, s: usize, far: bool) -> bool {
        let src = self.source_slot();
        match self.config.radius {
            None => true,
            Some(_) if s == src => true,
            Some(k) => {
                let (a, b) = (self.interval(src), self.interval(s));
                (if far { far_gap(a, b) } else { interval_gap(a, b) }) <= k
            }
        }
    }

    fn pair_min(&self, x: usize, y: usize) -> Option<Weight> {
        self.slots[y].ins.get(&x).and_then(|q| q.first()).map(|&(w, _)| w)
    }

    /// Files arc `a` under the pair of slots its endpoints belong to now, or drops it.
    /// Queues the head's layers that the pair may have been witnessing if the pair got
    /// heavier.
    fn refile(&mut self, arcs: Arcs<'_>, a: usize) {
        let want = arcs.get(a).and_then(|(t, h, w)| {
            let (x, y) = (self.slot_of_vertex[t], self.slot_of_vertex[h]);
            (x != NONE && y != NONE && x != y).then_some((x, y, w))
        });
        let old = self.filed.get(&a).copied();
        if want == old {
            return;
        }
        self.counters.touches += 1;
        if self.config.radius.is_some() && !self.unfiling {
            let (x, y, _) = want.or(old).expect("one side is filed");
            let ends = [x, y];
            if !ends.iter().any(|&s| self.in_window(s, true)) {
                self.counters.touches_outside_open += 1;
            }
            if !ends.iter().any(|&s| self.in_window(s, false)) {
                self.counters.touches_outside_closed += 1;
            }
        }
        if let Some((x, y, w)) = old {
            let before = self.pair_min(x, y).expect("filed arc has a queue");
            let q = self.slots[y].ins.get_mut(&x).expect("filed arc has a queue");
            q.remove(&(w, a));
            if q.is_empty() {
                self.slots[y].ins.remove(&x);
                self.slots[x].out.remove(&y);
            }
            self.filed.remove(&a);
            if let Some((nx, ny, nw)) = want.filter(|&(nx, ny, _)| (nx, ny) == (x, y)) {
                self.slots[ny].ins.entry(nx).or_default().insert((nw, a));
                self.slots[nx].out.insert(ny);
                self.filed.insert(a, (nx, ny, nw));
            }
            if self.pair_min(x, y).is_none_or(|after| after > before) {
                self.mark_witness(x, y, before);
            }
            if self.filed.contains_key(&a) {
                return;
            }
        }
        if let Some((x, y, w)) = want {
            self.slots[y].ins.entry(x).or_default().insert((w, a));
            self.slots[x].out.insert(y);
            self.filed.insert(a, (x, y, w));
        }
    }

    fn mark_witness(&mut self, x: usize, y: usize, w: Weight) {
        for j in 1..=self.hops {
            let dx = self.slots[x].dist[j - 1];
            if dx != INF && self.round(dx.saturating_add(w)) == self.slots[y].dist[j] {
                self.work.insert((j, y));
            }
        }
    }

    fn recompute(&mut self, j: usize, y: usize) -> Weight {
        if y == self.source_slot() {
            return 0;
        }
        self.counters.recomputes += 1;
        let slot = &self.slots[y];
        let mut best = slot.dist[j - 1];
        for (&x, q) in &slot.ins {
            let dx = self.slots[x].dist[j - 1];
            if dx != INF {
                best = best.min(dx.saturating_add(q.first().expect("nonempty pair").0));
            }
        }
        self.counters.scans += slot.ins.len() as u64;
        if best == INF {
            INF
        } else {
            self.round(best)
        }
    }

    fn initial_layers(&mut self) {
        for j in 1..=self.hops {
            let mut moved = false;
            for y in 0..self.slots.len() {
                let v = self.recompute(j, y);
                moved |= v != self.slots[y].dist[j - 1];
                self.slots[y].dist[j] = v;
            }
            if !moved {
                for slot in &mut self.slots {
                    let last = slot.dist[j];
                    slot.dist[j + 1..].fill(last);
                }
                break;
            }
        }
    }

    fn apply_split(&mut self, arcs: Arcs<'_>, ev: &SplitEvent) {
        let p = self.slot_of_node.get(ev.parent.index()).copied().unwrap_or(NONE);
        if p == NONE || !self.slots[p].active {
            return;
        }
        self.counters.splits += 1;
        let source_split = p == self.source_slot();
        let heir = (0..ev.children.len())
            .max_by_key(|&i| (ev.children[i].members.len(), core::cmp::Reverse(i)))
            .expect("split has children");
        let dist = self.slots[p].dist.clone();
        let mut child_slots = Vec::with_capacity(ev.children.len());
        for (i, child) in ev.children.iter().enumerate() {
            let s = if i == heir {
                self.slots[p].members = child.members.clone();
                self.slots[p].tau = child.tau;
                p
            } else {
                self.new_slot(child.members.clone(), child.tau, dist.clone())
            };
            self.map_node(child.node, s);
            child_slots.push(s);
        }
        let src = self.source_slot();
        let recheck: Vec<usize> = if source_split {
            (0..self.slots.len()).filter(|&s| self.slots[s].active).collect()
        } else {
            child_slots.clone()
        };
        for s in recheck {
            if !self.in_window(s, false) {
                self.remove_slot(arcs, s);
            }
        }
        let mut buf = Vec::new();
        for (i, &s) in child_slots.iter().enumerate() {
            if i == heir || !self.slots[s].active {
                continue;
            }
            for k in 0..self.slots[s].members.len() {
                buf.clear();
                arcs.incident(self.slots[s].members[k], &mut buf);
                for &a in &buf {
                    self.refile(arcs, a);
                }
            }
        }
        for &s in &child_slots {
            if !self.slots[s].active {
                continue;
            }
            self.changed.insert(s);
            for j in 1..=self.hops {
                self.work.insert((j, s));
            }
            if s != src && self.slots[s].dist[0] == 0 {
                self.slots[s].dist[0] = INF;
                let outs: Vec<usize> = self.slots[s].out.iter().copied().collect();
                self.work.extend(outs.into_iter().map(|z| (1, z)));
            }
        }
    }

    /// Drops a node that left the window. Its arcs were inside the window when filed, so
    /// unfiling them is not counted against locality.
    fn remove_slot(&mut self, arcs: Arcs<'_>, s: usize) {
        self.unfiling = true;
        for k in 0..self.slots[s].members.len() {
            self.slot_of_vertex[self.slots[s].members[k]] = NONE;
        }
        let mut buf = Vec::new();
        for k in 0..self.slots[s].members.len() {
            arcs.incident(self.slots[s].members[k], &mut buf);
        }
        for a in buf {
            self.refile(arcs, a);
        }
        self.unfiling = false;
        let slot = &mut self.slots[s];
        slot.active = false;
        slot.dist.fill(INF);
        self.changed.insert(s);
    }

    fn settle(&mut self) {
        while let Some((j, y)) = self.work.pop_first() {
            if !self.slots[y].active {
                continue;
            }
            let new = self.recompute(j, y);
            let old = self.slots[y].dist[j];
            if new == old {
                continue;
            }
            debug_assert!(new > old, "layer value decreased");
            self.counters.changes += 1;
            self.slots[y].dist[j] = new;
            if j == self.hops {
                self.changed.insert(y);
            } else {
                self.work.insert((j + 1, y));
                let outs: Vec<usize> = self.slots[y].out.iter().copied().collect();
                self.work.extend(outs.into_iter().map(|z| (j + 1, z)));
            }
        }
    }

    fn update(&mut self, arcs: Arcs<'_>, changed_arcs: &[usize], splits: &[SplitEvent]) {
        for ev in splits {
            self.apply_split(arcs, ev);
        }
        for &a in changed_arcs {
            self.refile(arcs, a);
        }
        self.settle();
    }

    /// Applies this stage's splits and the edge update (if any).
    pub fn handle_update(&mut self, graph: &DecrementalGraph, update: Option<&AppliedUpdate>, splits: &[SplitEvent]) {
        let arcs = Arcs { graph, shortcuts: None, reversed: self.config.reversed };
        let edges: Vec<EdgeId> = update.map(|u| u.edge).into_iter().collect();
        self.update(arcs, &edges, splits);
    }

    /// Vertices whose estimate may have changed since the last call.
    fn drain_changed(&mut self) -> Vec<Vertex> {
        let slots = core::mem::take(&mut self.changed);
        slots.into_iter().flat_map(|s| self.slots[s].members.iter().copied()).collect()
    }

    pub fn source(&self) -> Vertex {
        self.source
    }

    pub fn config(&self) -> &GesConfig {
        &self.config
    }

    /// Hop cap actually used: the configured one, or one less than the number of vertices
    /// hosted at build time if that is smaller.
    pub fn hops(&self) -> usize {
        self.hops
    }

    pub fn counters(&self) -> GesCounters {
        self.counters
    }

    /// Whether `v`'s node is still hosted.
    pub fn hosts(&self, v: Vertex) -> bool {
        self.slot_of_vertex[v] != NONE
    }

    /// Estimate for the node containing `v`; `INF` if unreachable, too far or not hosted.
    pub fn estimate(&self, v: Vertex) -> Weight {
        match self.slot_of_vertex[v] {
            NONE => INF,
            s => self.slots[s].dist[self.hops],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparseConfig {
    pub delta: Weight,
    pub epsilon: f64,
    pub quality: f64,
    /// Added to every node estimate to get vertex estimates.
    pub eta: Weight,
    /// Failure parameter of the sampling rate.
    pub c: f64,
    pub reversed: bool,
}

impl SparseConfig {
    pub fn new(delta: Weight, epsilon: f64, quality: f64, eta: Weight) -> Self {
        Self { delta, epsilon, quality, eta, c: 1.0, reversed: false }
    }

    /// Accuracy of each tree: two roundings of `1+ε/3` compose to at most `1+ε`.
    fn tree_epsilon(&self) -> f64 {
        self.epsilon / 3.0
    }
}

/// One nonempty shortcut level: a tree per sampled vertex and the shortcut arcs they
/// certify.
#[derive(Clone, Debug)]
pub struct HopsetLevel {
    pub params: LevelParams,
    samples: Vec<Vertex>,
    sampled: Vec<bool>,
    trees: Vec<GesTree>,
    /// Shortcut id for each (tail sample index, head vertex).
    arc_of: BTreeMap<(usize, Vertex), usize>,
}

impl HopsetLevel {
    pub fn samples(&self) -> &[Vertex] {
        &self.samples
    }

    pub fn trees(&self) -> &[GesTree] {
        &self.trees
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SparseCounters {
    pub root: GesCounters,
    pub samples: GesCounters,
    pub shortcut_updates: u64,
}

impl SparseCounters {
    /// The dense engine's counter shape, for reports that mix engines.
    pub fn as_dense(&self) -> DenseCounters {
        DenseCounters {
            scans: self.root.scans + self.samples.scans,
            repairs: self.root.recomputes + self.samples.recomputes,
            increments: self.root.changes + self.samples.changes,
            splits: self.root.splits,
            rekeys: self.root.touches + self.samples.touches,
            bucket_rescans: 0,
            bucket_moves: self.shortcut_updates,
        }
    }
}

/// A shortcut arc as listed by [`SparseEngine::hopset_edges`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HopsetEdge {
    pub level: usize,
    pub tail: Vertex,
    pub head: Vertex,
    pub weight: Weight,
}

/// Restricted SSSP from a root over the contracted graph plus shortcut levels.
#[derive(Clone, Debug)]
pub struct SparseEngine {
    config: SparseConfig,
    root: Vertex,
    levels: Vec<HopsetLevel>,
    shortcuts: Shortcuts,
    tree: GesTree,
    shortcut_updates: u64,
}

impl SparseEngine {
    /// Samples and builds every nonempty shortcut level, then the root tree. Requires
    /// `δ·q ≥ n`.
    pub fn new(graph: &DecrementalGraph, topo: &SccTopo, root: Vertex, config: SparseConfig, rng: &mut Rng) -> Result<Self> {
        let n = graph.n();
        if (config.delta as f64) * config.quality < n as f64 {
            return Err(Error::InvalidParameter("sparse engine needs delta * quality >= n"));
        }
        let eps = config.tree_epsilon();
        let mut shortcuts = Shortcuts::new(n);
        let mut levels = Vec::new();
        let top = n.max(1).next_power_of_two().trailing_zeros() as usize;
        for i in 0..=top {
            let Some(params) = LevelParams::new(n, i, config.quality, config.delta, config.c) else { continue };
            let sampled: Vec<bool> = (0..n).map(|_| chance(rng, params.probability)).collect();
            let samples: Vec<Vertex> = (0..n).filter(|&v| sampled[v]).collect();
            let arcs = Arcs { graph, shortcuts: None, reversed: config.reversed };
            let tree_config = GesConfig {
                hops: params.reach,
                depth: params.reach as Weight,
                epsilon: eps,
                radius: Some(params.radius),
                reversed: config.reversed,
            };
            let trees: Vec<GesTree> = samples.iter().map(|&s| GesTree::with_arcs(arcs, topo, s, tree_config)).collect();
            let mut arc_of = BTreeMap::new();
            for (k, tree) in trees.iter().enumerate() {
                for &t in &samples {
                    let w = tree.estimate(t);
                    if t != samples[k] && w <= params.reach as Weight {
                        let id = shortcuts.push(Shortcut { level: i, tail: samples[k], head: t, weight: w });
                        arc_of.insert((k, t), id);
                    }
                }
            }
            levels.push(HopsetLevel { params, samples, sampled, trees, arc_of });
        }
        let arcs = Arcs { graph, shortcuts: Some(&shortcuts), reversed: config.reversed };
        let tree_config = GesConfig { hops: hop_threshold(n), depth: config.delta, epsilon: eps, radius: None, reversed: config.reversed };
        let tree = GesTree::with_arcs(arcs, topo, root, tree_config);
        Ok(Self { config, root, levels, shortcuts, tree, shortcut_updates: 0 })
    }

    /// Applies this stage's splits and the edge update (if any) to every sample tree,
    /// moves the affected shortcut weights, then updates the root tree.
    pub fn handle_update(&mut self, graph: &DecrementalGraph, update: Option<&AppliedUpdate>, splits: &[SplitEvent]) {
        let edges: Vec<usize> = update.map(|u| u.edge).into_iter().collect();
        let m = graph.initial_edge_count();
        let mut changed_arcs = edges.clone();
        let arcs = Arcs { graph, shortcuts: None, reversed: self.config.reversed };
        for level in &mut self.levels {
            let reach = level.params.reach as Weight;
            for (k, tree) in level.trees.iter_mut().enumerate() {
                tree.update(arcs, &edges, splits);
                for t in tree.drain_changed() {
                    if !level.sampled[t] {
                        continue;
                    }
                    let Some(&id) = level.arc_of.get(&(k, t)) else { continue };
                    let w = tree.estimate(t);
                    let w = if w <= reach { w } else { INF };
                    let arc = &mut self.shortcuts.arcs[id];
                    if arc.weight != w {
                        debug_assert!(w > arc.weight, "shortcut weight decreased");
                        arc.weight = w;
                        self.shortcut_updates += 1;
                        changed_arcs.push(m + id);
                    }
                }
            }
        }
        let arcs = Arcs { graph, shortcuts: Some(&self.shortcuts), reversed: self.config.reversed };
        self.tree.update(arcs, &changed_arcs, splits);
        self.tree.changed.clear();
    }

    pub fn config(&self) -> &SparseConfig {
        &self.config
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn levels(&self) -> &[HopsetLevel] {
        &self.levels
    }

    pub fn root_tree(&self) -> &GesTree {
        &self.tree
    }

    /// Estimate of the node containing `v`, without the diameter term.
    pub fn node_estimate(&self, v: Vertex) -> Weight {
        self.tree.estimate(v)
    }

    /// Estimate of `dist(root, v)` (or `dist(v, root)` when reversed).
    pub fn query(&self, v: Vertex) -> Weight {
        match self.node_estimate(v) {
            INF => INF,
            est => est.saturating_add(self.config.eta),
        }
    }

    /// Live shortcut arcs, in the engine's orientation.
    pub fn hopset_edges(&self) -> Vec<HopsetEdge> {
        self.shortcuts
            .arcs
            .iter()
            .filter(|s| s.weight != INF)
            .map(|s| HopsetEdge { level: s.level, tail: s.tail, head: s.head, weight: s.weight })
            .collect()
    }

    pub fn counters(&self) -> SparseCounters {
        let mut samples = GesCounters::default();
        for level in &self.levels {
            for t in &level.trees {
                samples += t.counters();
            }
        }
        SparseCounters { root: self.tree.counters(), samples, shortcut_updates: self.shortcut_updates }
    }
}
