//! Approximate topological orders.
//!
//! An [`Ato`] maintains a pruned graph `G' = G \ F`, the SCC partition of `G'` with nested
//! interval labels, and one random center per SCC. A center runs a restricted SSSP
//! structure on the subgraph of `G` induced by the SCC it was sampled in. Whenever a
//! center reports a member too far away, separators are cut out of `G'` until every SCC
//! has weak diameter proportional to its size.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{vertex_mask, AppliedUpdate, DecrementalGraph, EdgeId, GraphView, Vertex, Weight, INF};
use crate::rng::{below, named_stream, Rng};
use crate::scc_topo::{strongly_connected, NodeId, SccTopo, SplitEvent};
use crate::separator::{out_separator, partition};
use crate::sssp::{Host, RestrictedSssp, SsspFactory};

/// Approximation factor assumed of the center structures.
pub const ALPHA: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtoConfig {
    /// Depth scale; every SCC `X` is kept at weak diameter about `δ|X|/n`.
    pub delta: Weight,
    /// Failure parameter.
    pub c: f64,
    /// Separator success parameter. Defaults to `(c + 2) ln n`.
    pub zeta: Option<f64>,
}

impl AtoConfig {
    pub fn new(delta: Weight, c: f64) -> Self {
        Self { delta, c, zeta: None }
    }

    pub fn zeta_for(&self, n: usize) -> f64 {
        self.zeta.unwrap_or_else(|| (self.c + 2.0) * libm::log(n.max(2) as f64))
    }
}

struct Center {
    sssp: Box<dyn RestrictedSssp>,
    seen: u64,
}

/// Counters accumulated over the lifetime of one [`Ato`].
#[derive(Clone, Debug, Default)]
pub struct AtoStats {
    pub resolve_iterations: u64,
    pub centers_built: u64,
    pub centers_dropped: u64,
    /// Per vertex, how many resolve iterations put it on the cut-off side.
    pub participation: Vec<u32>,
}

/// Plain copy of the maintained order for dumps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtoSnapshot {
    /// `(τ, members)` in label order.
    pub nodes: Vec<(usize, Vec<Vertex>)>,
    /// Edges removed from `G'` by separators, in removal order.
    pub separator_edges: Vec<EdgeId>,
}

pub struct Ato {
    n: usize,
    delta: Weight,
    eta_diam: Weight,
    zeta: f64,
    trivial: bool,
    excluded: Vec<bool>,
    removed: Vec<EdgeId>,
    topo: SccTopo,
    node_center: Vec<Option<Vertex>>,
    centers: BTreeMap<Vertex, Center>,
    dirty: BTreeSet<NodeId>,
    factory: Option<Arc<dyn SsspFactory>>,
    rng: Rng,
    stats: AtoStats,
}

impl core::fmt::Debug for Ato {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Ato")
            .field("n", &self.n)
            .field("delta", &self.delta)
            .field("nodes", &self.topo.node_count())
            .field("removed", &self.removed.len())
            .finish_non_exhaustive()
    }
}

fn exceeds(estimate: Weight, n: usize, delta: Weight, size: usize) -> bool {
    estimate == INF || u128::from(estimate) * n as u128 > u128::from(delta) * size as u128
}

impl Ato {
    /// Runs the initial partitioning rounds, builds the SCC order of `G'`, samples centers
    /// and resolves any remaining diameter violations.
    pub fn init(graph: &DecrementalGraph, config: AtoConfig, factory: Arc<dyn SsspFactory>, rng: Rng) -> Result<Self> {
        if config.delta == 0 {
            return Err(Error::InvalidParameter("delta must be positive"));
        }
        let n = graph.n();
        let zeta = config.zeta_for(n);
        let mut ato = Self {
            n,
            delta: config.delta,
            eta_diam: 2 * ALPHA * config.delta,
            zeta,
            trivial: false,
            excluded: alloc::vec![false; graph.initial_edge_count()],
            removed: Vec::new(),
            topo: SccTopo::from_ordered(n, Vec::new()),
            node_center: Vec::new(),
            centers: BTreeMap::new(),
            dirty: BTreeSet::new(),
            factory: Some(factory),
            rng,
            stats: AtoStats { participation: alloc::vec![0; n], ..Default::default() },
        };
        ato.initial_partition(graph).map_err(|_| Error::AtoInitFailed)?;
        ato.topo = SccTopo::compute(&graph.view().without_edges(&ato.excluded));
        let nodes: Vec<NodeId> = ato.topo.nodes().collect();
        for x in nodes {
            ato.assign_fresh_center(graph, x)?;
            ato.dirty.insert(x);
        }
        let mut events = Vec::new();
        ato.resolve(graph, &mut events).map_err(|_| Error::AtoInitFailed)?;
        Ok(ato)
    }

    /// The singleton partition labelled by the condensation order of `graph`; it never
    /// changes and has no diameter budget.
    pub fn trivial(graph: &DecrementalGraph) -> Self {
        let n = graph.n();
        Self {
            n,
            delta: 0,
            eta_diam: 0,
            zeta: 0.0,
            trivial: true,
            excluded: alloc::vec![false; graph.initial_edge_count()],
            removed: Vec::new(),
            topo: SccTopo::singletons(&graph.view()),
            node_center: Vec::new(),
            centers: BTreeMap::new(),
            dirty: BTreeSet::new(),
            factory: None,
            rng: named_stream(0, "trivial-ato", 0),
            stats: AtoStats { participation: alloc::vec![0; n], ..Default::default() },
        }
    }

    fn initial_partition(&mut self, graph: &DecrementalGraph) -> Result<()> {
        let factory = self.factory.clone().expect("nontrivial order has a factory");
        let rounds = ceil_log2(self.delta);
        for i in 0..=rounds {
            let comps = strongly_connected(&graph.view().without_edges(&self.excluded));
            let size_cap = self.n >> i.min(63);
            let d = self.delta as f64 / libm::pow(2.0, f64::from(i));
            for comp in comps {
                if comp.len() <= 1 || comp.len() > size_cap {
                    continue;
                }
                let mask = vertex_mask(self.n, &comp);
                let cut = partition(&graph.induced(&mask), d, self.zeta, &*factory, &mut self.rng)?;
                for e in cut {
                    if !self.excluded[e] {
                        self.excluded[e] = true;
                        self.removed.push(e);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> Weight {
        self.delta
    }

    /// Weak-diameter budget: every node `X` has diameter at most `|X|·η/n` in `G`.
    pub fn eta_diam(&self) -> Weight {
        self.eta_diam
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    pub fn topo(&self) -> &SccTopo {
        &self.topo
    }

    /// Mask of edges removed from `G'` by separators.
    pub fn excluded(&self) -> &[bool] {
        &self.excluded
    }

    pub fn separator_edges(&self) -> &[EdgeId] {
        &self.removed
    }

    /// `G' = G \ F` as a view.
    pub fn pruned<'a>(&'a self, graph: &'a DecrementalGraph) -> GraphView<'a> {
        graph.view().without_edges(&self.excluded)
    }

    pub fn stats(&self) -> &AtoStats {
        &self.stats
    }

    pub fn center(&self, x: NodeId) -> Option<Vertex> {
        self.node_center.get(x.index()).copied().flatten()
    }

    /// Vertices currently running a center structure.
    pub fn center_structures(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.centers.keys().copied()
    }

    pub fn snapshot(&self) -> AtoSnapshot {
        AtoSnapshot {
            nodes: self.topo.ordered_nodes().into_iter().map(|(_, tau, m)| (tau, m.to_vec())).collect(),
            separator_edges: self.removed.clone(),
        }
    }

    /// Processes an update already applied to `graph` and returns every split it caused,
    /// in order: first the split from the update itself, then those from resolving.
    pub fn handle_update(&mut self, graph: &DecrementalGraph, update: &AppliedUpdate) -> Result<Vec<SplitEvent>> {
        if self.trivial {
            return Ok(Vec::new());
        }
        for (&c, center) in self.centers.iter_mut() {
            center.sssp.handle_update(graph, update);
            let gen = center.sssp.generation();
            if gen != center.seen {
                center.seen = gen;
                self.dirty.insert(self.topo.node_of(c));
            }
        }
        let mut events = Vec::new();
        if update.is_deletion() && !self.excluded[update.edge] {
            let splits = self.topo.apply_deletions(&graph.view().without_edges(&self.excluded), &[update.edge]);
            self.process_splits(graph, &splits)?;
            events.extend(splits);
        }
        self.resolve(graph, &mut events).map_err(|e| match e {
            Error::PartitionFailed => Error::AtoUpdateFailed,
            other => other,
        })?;
        Ok(events)
    }

    fn resolve(&mut self, graph: &DecrementalGraph, events: &mut Vec<SplitEvent>) -> Result<()> {
        while let Some(x) = self.dirty.pop_first() {
            if !self.topo.is_alive(x) || self.topo.size(x) <= 1 {
                continue;
            }
            let size = self.topo.size(x);
            let Some(center) = self.center(x).and_then(|c| self.centers.get(&c)) else {
                continue;
            };
            let (n, delta) = (self.n, self.delta);
            let far = self.topo.members(x).iter().copied().find(|&t| {
                exceeds(center.sssp.from_root(t), n, delta, size) || exceeds(center.sssp.to_root(t), n, delta, size)
            });
            let Some(t) = far else { continue };
            let far_to_center = exceeds(center.sssp.to_root(t), n, delta, size);
            self.stats.resolve_iterations += 1;

            let mask = vertex_mask(n, self.topo.members(x));
            let depth = (size as f64) * (delta as f64) / (2.0 * n as f64);
            let pruned = graph.induced(&mask).without_edges(&self.excluded);
            let sep = if far_to_center {
                out_separator(t, &pruned, depth, self.zeta, &mut self.rng)
            } else {
                out_separator(t, &pruned.reversed(), depth, self.zeta, &mut self.rng)
            };
            if sep.failed {
                return Err(Error::PartitionFailed);
            }
            let ball = vertex_mask(n, &sep.vertices);
            let factory = self.factory.clone().expect("nontrivial order has a factory");
            let inner = partition(
                &graph.induced(&ball).without_edges(&self.excluded),
                depth / 2.0,
                self.zeta,
                &*factory,
                &mut self.rng,
            )?;
            for &v in &sep.vertices {
                self.stats.participation[v] += 1;
            }
            let mut fresh = Vec::new();
            for e in sep.edges.into_iter().chain(inner) {
                if !self.excluded[e] {
                    self.excluded[e] = true;
                    self.removed.push(e);
                    fresh.push(e);
                }
            }
            let splits = self.topo.apply_deletions(&graph.view().without_edges(&self.excluded), &fresh);
            self.process_splits(graph, &splits)?;
            events.extend(splits);
            if self.topo.is_alive(x) {
                self.dirty.insert(x);
            }
        }
        Ok(())
    }

    /// Hands each split's center to the child containing it and samples centers for the
    /// other children. Structures whose center ends up alone are dropped.
    fn process_splits(&mut self, graph: &DecrementalGraph, splits: &[SplitEvent]) -> Result<()> {
        for ev in splits {
            let inherited = self.node_center.get_mut(ev.parent.index()).and_then(Option::take);
            for child in &ev.children {
                self.dirty.insert(child.node);
                match inherited {
                    Some(c) if child.members.contains(&c) => {
                        self.set_center(child.node, c);
                        if child.members.len() == 1 && self.centers.remove(&c).is_some() {
                            self.stats.centers_dropped += 1;
                        }
                    }
                    _ => self.assign_fresh_center(graph, child.node)?,
                }
            }
        }
        Ok(())
    }

    fn set_center(&mut self, x: NodeId, c: Vertex) {
        if self.node_center.len() <= x.index() {
            self.node_center.resize(x.index() + 1, None);
        }
        self.node_center[x.index()] = Some(c);
    }

    fn assign_fresh_center(&mut self, graph: &DecrementalGraph, x: NodeId) -> Result<()> {
        let members = self.topo.members(x);
        let c = members[below(&mut self.rng, members.len())];
        if members.len() > 1 {
            let host = Host::induced(vertex_mask(self.n, members));
            let factory = self.factory.as_ref().expect("nontrivial order has a factory");
            let sssp = factory.build(graph, host, c)?;
            let seen = sssp.generation();
            self.centers.insert(c, Center { sssp, seen });
            self.stats.centers_built += 1;
        }
        self.set_center(x, c);
        Ok(())
    }

    /// `Σ |τ(X^u) − τ(X^v)|` over the edges of `path`.
    pub fn path_potential(&self, graph: &DecrementalGraph, path: &[Vertex]) -> Result<u64> {
        path_potential(&self.topo, graph, path)
    }

    /// `Σ max(0, τ(X^u) − τ(X^v))` over the edges of `path`.
    pub fn backward_potential(&self, graph: &DecrementalGraph, path: &[Vertex]) -> Result<u64> {
        backward_potential(&self.topo, graph, path)
    }
}

fn ceil_log2(x: Weight) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

fn label_steps<'a>(
    topo: &'a SccTopo,
    graph: &'a DecrementalGraph,
    path: &'a [Vertex],
) -> impl Iterator<Item = Result<(i64, i64)>> + 'a {
    path.windows(2).map(move |w| {
        let (u, v) = (w[0], w[1]);
        match graph.find_edge(u, v) {
            Some(e) if graph.weight(e) != INF => {
                Ok((topo.tau(topo.node_of(u)) as i64, topo.tau(topo.node_of(v)) as i64))
            }
            _ => Err(Error::BrokenPath { tail: u, head: v }),
        }
    })
}

/// `Σ |τ(X^u) − τ(X^v)|` over the edges of `path` under `topo`.
pub fn path_potential(topo: &SccTopo, graph: &DecrementalGraph, path: &[Vertex]) -> Result<u64> {
    label_steps(topo, graph, path).try_fold(0u64, |acc, step| step.map(|(a, b)| acc + a.abs_diff(b)))
}

/// `Σ max(0, τ(X^u) − τ(X^v))` over the edges of `path` under `topo`.
pub fn backward_potential(topo: &SccTopo, graph: &DecrementalGraph, path: &[Vertex]) -> Result<u64> {
    label_steps(topo, graph, path).try_fold(0u64, |acc, step| step.map(|(a, b)| acc + (a - b).max(0) as u64))
}

/// Drives the copies of a bundle; implementations may run jobs concurrently.
pub trait CopyRunner: Send + Sync {
    /// Calls `job(i)` exactly once for every `i < count`.
    fn run(&self, count: usize, job: &(dyn Fn(usize) + Sync));
}

/// Runs copies one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl CopyRunner for Sequential {
    fn run(&self, count: usize, job: &(dyn Fn(usize) + Sync)) {
        (0..count).for_each(job);
    }
}

/// `ℓ` independent orders over one graph.
#[derive(Debug)]
pub struct AtoBundle {
    copies: Vec<Ato>,
}

fn collect_copies<T>(slots: Vec<spin::Mutex<Option<Result<T>>>>) -> Result<Vec<T>> {
    slots
        .into_iter()
        .enumerate()
        .map(|(copy, slot)| match slot.into_inner().expect("runner skipped a copy") {
            Ok(v) => Ok(v),
            Err(e) => Err(Error::BundleCopyFailed { copy, source: Box::new(e) }),
        })
        .collect()
}

impl AtoBundle {
    /// Copy `i` draws from the stream `(seed, "ato-copy", i)`.
    pub fn build(
        graph: &DecrementalGraph,
        config: AtoConfig,
        factory: Arc<dyn SsspFactory>,
        seed: u64,
        copies: usize,
        runner: &dyn CopyRunner,
    ) -> Result<Self> {
        if copies == 0 {
            return Err(Error::InvalidParameter("a bundle needs at least one copy"));
        }
        let slots: Vec<_> = (0..copies).map(|_| spin::Mutex::new(None)).collect();
        runner.run(copies, &|i| {
            let rng = named_stream(seed, "ato-copy", i as u64);
            *slots[i].lock() = Some(Ato::init(graph, config, factory.clone(), rng));
        });
        Ok(Self { copies: collect_copies(slots)? })
    }

    /// A bundle of one trivial order.
    pub fn trivial(graph: &DecrementalGraph) -> Self {
        Self { copies: alloc::vec![Ato::trivial(graph)] }
    }

    pub fn from_copies(copies: Vec<Ato>) -> Self {
        Self { copies }
    }

    pub fn copies(&self) -> &[Ato] {
        &self.copies
    }

    pub fn len(&self) -> usize {
        self.copies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }

    /// Updates every copy and returns the split events per copy. All copies have seen
    /// the update when this returns.
    pub fn handle_update(
        &mut self,
        graph: &DecrementalGraph,
        update: &AppliedUpdate,
        runner: &dyn CopyRunner,
    ) -> Result<Vec<Vec<SplitEvent>>> {
        let count = self.copies.len();
        let copies: Vec<_> = self.copies.iter_mut().map(spin::Mutex::new).collect();
        let slots: Vec<_> = (0..count).map(|_| spin::Mutex::new(None)).collect();
        runner.run(count, &|i| {
            let mut copy = copies[i].lock();
            *slots[i].lock() = Some(copy.handle_update(graph, update));
        });
        collect_copies(slots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::es_tree::EsFactory;
    use crate::graph::UpdateEvent;

    fn factory(depth: Weight) -> Arc<dyn SsspFactory> {
        Arc::new(EsFactory { depth })
    }

    #[test]
    fn dag_keeps_singletons_and_no_cuts() {
        let g = DecrementalGraph::new(4, &[(0, 1, 1), (1, 2, 1), (0, 3, 2)]).unwrap();
        let a = Ato::init(&g, AtoConfig::new(4, 1.0), factory(4), named_stream(1, "t", 0)).unwrap();
        assert!(a.separator_edges().is_empty());
        assert_eq!(a.topo().node_count(), 4);
    }

    #[test]
    fn single_vertex() {
        let g = DecrementalGraph::new(1, &[]).unwrap();
        let a = Ato::init(&g, AtoConfig::new(1, 1.0), factory(1), named_stream(1, "t", 0)).unwrap();
        assert_eq!(a.topo().node_count(), 1);
        assert!(a.separator_edges().is_empty());
    }

    #[test]
    fn potentials() {
        let g = DecrementalGraph::new(3, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]).unwrap();
        let topo = SccTopo::from_ordered(3, alloc::vec![alloc::vec![0], alloc::vec![1], alloc::vec![2]]);
        assert_eq!(path_potential(&topo, &g, &[0, 1, 2, 0]).unwrap(), 4);
        assert_eq!(backward_potential(&topo, &g, &[0, 1, 2, 0]).unwrap(), 2);
        assert_eq!(path_potential(&topo, &g, &[0]).unwrap(), 0);
        assert_eq!(path_potential(&topo, &g, &[0, 2]), Err(Error::BrokenPath { tail: 0, head: 2 }));
    }

    #[test]
    fn cycle_respects_budget_after_deletions() {
        let edges: Vec<_> = (0..8).map(|i| (i, (i + 1) % 8, 1)).chain((0..8).map(|i| ((i + 1) % 8, i, 1))).collect();
        let mut g = DecrementalGraph::new(8, &edges).unwrap();
        let config = AtoConfig { delta: 8, c: 1.0, zeta: Some(1.0) };
        let mut bundle = AtoBundle::build(&g, config, factory(8), 5, 2, &Sequential).unwrap();
        let up = g.apply_update(UpdateEvent::delete(3, 4)).unwrap();
        bundle.handle_update(&g, &up, &Sequential).unwrap();
        for a in bundle.copies() {
            for x in a.topo().nodes() {
                assert!(a.topo().size(x) <= 8);
                assert!(a.center(x).is_some_and(|c| a.topo().members(x).contains(&c)));
            }
        }
    }
}
