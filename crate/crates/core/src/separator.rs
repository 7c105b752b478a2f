//! Randomized edge separators.
//!
//! [`out_separator`] grows a Dijkstra ball to an exponentially distributed radius and
//! cuts the edges leaving it. [`partition`] applies it recursively until every SCC of the
//! remaining graph has small weak diameter.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, GraphView, Vertex, Weight, INF};
use crate::rng::{below, unit_open, Rng};
use crate::sssp::{Host, SsspFactory};

/// Ball radius used by [`partition`] is `d / BALL_DEPTH_DIVISOR`.
pub const BALL_DEPTH_DIVISOR: f64 = 8.0;
/// The pruning loop in [`partition`] runs while some estimate exceeds `d / LOOP_THRESHOLD_DIVISOR`.
pub const LOOP_THRESHOLD_DIVISOR: f64 = 4.0;
/// Inside that loop, a vertex whose distance to the root exceeds
/// `d / BRANCH_THRESHOLD_DIVISOR` is cut with an out-ball, otherwise with an in-ball.
pub const BRANCH_THRESHOLD_DIVISOR: f64 = 2.0;
/// A recursive call is made when the chosen ball has at most this fraction of the vertices.
pub const SMALL_SIDE_FRACTION: f64 = 2.0 / 3.0;
/// In the forward/backward race, the slower ball is abandoned once its work exceeds this
/// multiple of the finished one's.
pub const RACE_ABORT_FACTOR: u64 = 4;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeparatorResult {
    /// Edges leaving the ball.
    pub edges: Vec<EdgeId>,
    /// The ball, in the order its vertices were settled.
    pub vertices: Vec<Vertex>,
    pub failed: bool,
    pub radius: f64,
    /// Out-edges of ball vertices inspected while growing the ball.
    pub touched: usize,
}

/// Draws `X ~ Exp(zeta / depth)` by inverse transform.
pub fn sample_radius(depth: f64, zeta: f64, rng: &mut Rng) -> f64 {
    -libm::log(unit_open(rng)) * depth / zeta
}

/// Out-ball separator from `root` with a random radius.
pub fn out_separator(root: Vertex, view: &GraphView<'_>, depth: f64, zeta: f64, rng: &mut Rng) -> SeparatorResult {
    let radius = sample_radius(depth, zeta, rng);
    out_separator_with_radius(root, view, depth, radius)
}

/// Out-ball separator with an injected radius; fails iff `radius >= depth`.
pub fn out_separator_with_radius(root: Vertex, view: &GraphView<'_>, depth: f64, radius: f64) -> SeparatorResult {
    if radius >= depth {
        return SeparatorResult { failed: true, radius, ..Default::default() };
    }
    let mut ball = BallGrower::new(*view, root, radius);
    while !ball.step() {}
    ball.finish()
}

/// Incremental truncated Dijkstra so two balls can be grown in lockstep.
struct BallGrower<'a> {
    view: GraphView<'a>,
    radius: f64,
    heap: BinaryHeap<Reverse<(Weight, Vertex)>>,
    tentative: BTreeMap<Vertex, Weight>,
    settled: BTreeMap<Vertex, Weight>,
    order: Vec<Vertex>,
    touched: usize,
    work: u64,
}

impl<'a> BallGrower<'a> {
    fn new(view: GraphView<'a>, root: Vertex, radius: f64) -> Self {
        let mut heap = BinaryHeap::new();
        let mut tentative = BTreeMap::new();
        if view.contains(root) {
            heap.push(Reverse((0, root)));
            tentative.insert(root, 0);
        }
        Self {
            view,
            radius,
            heap,
            tentative,
            settled: BTreeMap::new(),
            order: Vec::new(),
            touched: 0,
            work: 0,
        }
    }

    /// Settles at most one vertex; returns true once the ball is complete.
    fn step(&mut self) -> bool {
        let Some(Reverse((d, v))) = self.heap.pop() else {
            return true;
        };
        self.work += 1;
        if self.settled.contains_key(&v) || self.tentative.get(&v).is_some_and(|&t| t < d) {
            return self.heap.is_empty();
        }
        self.settled.insert(v, d);
        self.order.push(v);
        for (_, head, w) in self.view.out_edges(v) {
            self.touched += 1;
            self.work += 1;
            let nd = d.saturating_add(w);
            if nd as f64 <= self.radius && self.tentative.get(&head).map_or(true, |&t| nd < t) {
                self.tentative.insert(head, nd);
                self.heap.push(Reverse((nd, head)));
            }
        }
        self.heap.is_empty()
    }

    fn done(&self) -> bool {
        self.heap.is_empty()
    }

    /// Number of edges of the view with at least one endpoint in the ball.
    fn incidence(&self) -> usize {
        let mut count = 0;
        for &v in &self.order {
            count += self.view.out_edges(v).count();
            count += self.view.in_edges(v).filter(|(_, t, _)| !self.settled.contains_key(t)).count();
        }
        count
    }

    fn finish(self) -> SeparatorResult {
        let mut edges = Vec::new();
        for &v in &self.order {
            for (e, head, _) in self.view.out_edges(v) {
                if !self.settled.contains_key(&head) {
                    edges.push(e);
                }
            }
        }
        SeparatorResult { edges, vertices: self.order, failed: false, radius: self.radius, touched: self.touched }
    }
}

/// Counters from one [`partition`] call tree.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartitionStats {
    pub separator_calls: usize,
    pub sssp_builds: usize,
    pub recursive_calls: usize,
}

/// Edge set whose removal leaves every SCC of `view` with weak diameter at most `d`
/// (measured in the pruned graph). Ball radii use success parameter `3·zeta·ln n`.
///
/// Any separator failure aborts the whole call with [`Error::PartitionFailed`].
pub fn partition(view: &GraphView<'_>, d: f64, zeta: f64, factory: &dyn SsspFactory, rng: &mut Rng) -> Result<Vec<EdgeId>> {
    let mut stats = PartitionStats::default();
    partition_with_stats(view, d, zeta, factory, rng, &mut stats)
}

pub fn partition_with_stats(
    view: &GraphView<'_>,
    d: f64,
    zeta: f64,
    factory: &dyn SsspFactory,
    rng: &mut Rng,
    stats: &mut PartitionStats,
) -> Result<Vec<EdgeId>> {
    let members: Vec<bool> = (0..view.n()).map(|v| view.contains(v)).collect();
    let mut out = Vec::new();
    let mut run = PartitionRun { base: view.forward(), d, zeta, factory, rng, stats, out: &mut out };
    run.solve(members)?;
    out.sort_unstable();
    Ok(out)
}

struct PartitionRun<'r, 'a> {
    base: GraphView<'a>,
    d: f64,
    zeta: f64,
    factory: &'r dyn SsspFactory,
    rng: &'r mut Rng,
    stats: &'r mut PartitionStats,
    out: &'r mut Vec<EdgeId>,
}

/// Vertex set with O(1) uniform sampling and removal.
struct Remaining {
    list: Vec<Vertex>,
    pos: Vec<usize>,
    mask: Vec<bool>,
}

impl Remaining {
    fn new(mask: Vec<bool>) -> Self {
        let list: Vec<Vertex> = (0..mask.len()).filter(|&v| mask[v]).collect();
        let mut pos = alloc::vec![usize::MAX; mask.len()];
        for (i, &v) in list.iter().enumerate() {
            pos[v] = i;
        }
        Self { list, pos, mask }
    }

    fn remove(&mut self, v: Vertex) {
        if !self.mask[v] {
            return;
        }
        self.mask[v] = false;
        let i = self.pos[v];
        let last = *self.list.last().expect("nonempty");
        self.list.swap_remove(i);
        if last != v {
            self.pos[last] = i;
        }
    }
}

impl PartitionRun<'_, '_> {
    fn solve(&mut self, members: Vec<bool>) -> Result<()> {
        self.stats.recursive_calls += 1;
        let mut h = Remaining::new(members);
        let n = h.list.len();
        if n <= 1 {
            return Ok(());
        }
        let boost = 3.0 * self.zeta * libm::log(n as f64);
        let ball_depth = self.d / BALL_DEPTH_DIVISOR;
        while !h.list.is_empty() {
            let r = h.list[below(self.rng, h.list.len())];
            let chosen = self.race(&h.mask, r, ball_depth, boost)?;
            if (chosen.vertices.len() as f64) <= SMALL_SIDE_FRACTION * n as f64 {
                self.out.extend_from_slice(&chosen.edges);
                let sub = crate::graph::vertex_mask(h.mask.len(), &chosen.vertices);
                for &v in &chosen.vertices {
                    h.remove(v);
                }
                self.solve(sub)?;
            } else {
                self.prune_far(&mut h, r, ball_depth, boost)?;
            }
        }
        Ok(())
    }

    /// The branch taken when the ball around `r` is large: carve off every vertex that an
    /// SSSP structure from `r` reports as far, then drop what is left.
    fn prune_far(&mut self, h: &mut Remaining, r: Vertex, ball_depth: f64, boost: f64) -> Result<()> {
        let graph = self.base.graph();
        let host = Host { members: h.mask.clone(), excluded: self.base.excluded().map(<[bool]>::to_vec) };
        let mut sssp = self.factory.build(graph, host, r)?;
        self.stats.sssp_builds += 1;
        let loop_threshold = self.d / LOOP_THRESHOLD_DIVISOR;
        let branch_threshold = self.d / BRANCH_THRESHOLD_DIVISOR;
        let exceeds = |x: Weight, t: f64| x == INF || x as f64 > t;
        loop {
            let far = h.list.iter().copied().find(|&v| {
                exceeds(sssp.from_root(v), loop_threshold) || exceeds(sssp.to_root(v), loop_threshold)
            });
            let Some(v) = far else { break };
            let hview = self.base.with_members(&h.mask);
            let sep = if exceeds(sssp.to_root(v), branch_threshold) {
                out_separator(v, &hview, ball_depth, boost, self.rng)
            } else {
                out_separator(v, &hview.reversed(), ball_depth, boost, self.rng)
            };
            self.stats.separator_calls += 1;
            if sep.failed {
                return Err(Error::PartitionFailed);
            }
            for &u in &sep.vertices {
                h.remove(u);
            }
            sssp.remove_vertices(graph, &sep.vertices);
            self.out.extend_from_slice(&sep.edges);
            self.solve(crate::graph::vertex_mask(h.mask.len(), &sep.vertices))?;
        }
        for v in core::mem::take(&mut h.list) {
            h.mask[v] = false;
        }
        Ok(())
    }

    /// Grows an out-ball and an in-ball from `r` in lockstep and keeps the one touching
    /// fewer edges, abandoning the slower one once it is clearly more expensive.
    fn race(&mut self, mask: &[bool], r: Vertex, depth: f64, boost: f64) -> Result<SeparatorResult> {
        let view = self.base.with_members(mask);
        let rf = sample_radius(depth, boost, self.rng);
        let rb = sample_radius(depth, boost, self.rng);
        self.stats.separator_calls += 2;
        if rf >= depth || rb >= depth {
            return Err(Error::PartitionFailed);
        }
        let mut fwd = BallGrower::new(view, r, rf);
        let mut bwd = BallGrower::new(view.reversed(), r, rb);
        while !fwd.done() && !bwd.done() {
            fwd.step();
            if !fwd.done() {
                bwd.step();
            }
        }
        let (finished, mut other, finished_is_fwd) = if fwd.done() { (fwd, bwd, true) } else { (bwd, fwd, false) };
        let budget = RACE_ABORT_FACTOR * finished.work.max(1);
        while !other.done() && other.work <= budget {
            other.step();
        }
        if !other.done() {
            return Ok(finished.finish());
        }
        let (a, b) = (finished.incidence(), other.incidence());
        if a < b || (a == b && finished_is_fwd) {
            Ok(finished.finish())
        } else {
            Ok(other.finish())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::es_tree::EsFactory;
    use crate::graph::DecrementalGraph;
    use crate::rng::named_stream;

    #[test]
    fn injected_radius_examples() {
        let g = DecrementalGraph::new(3, &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let s = out_separator_with_radius(0, &g.view(), 4.0, 0.5);
        assert_eq!(s.vertices, [0]);
        assert_eq!(s.edges, [0]);
        assert!(!s.failed);
        assert_eq!(s.touched, 1);
        assert!(out_separator_with_radius(0, &g.view(), 4.0, 4.0).failed);
        let s = out_separator_with_radius(0, &g.view(), 4.0, 2.0);
        assert_eq!(s.vertices, [0, 1, 2]);
        assert!(s.edges.is_empty());
    }

    #[test]
    fn reverse_ball() {
        let g = DecrementalGraph::new(3, &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let s = out_separator_with_radius(2, &g.view().reversed(), 4.0, 1.0);
        assert_eq!(s.vertices, [2, 1]);
        assert_eq!(s.edges, [0]);
    }

    #[test]
    fn partition_trivial_inputs() {
        let mut rng = named_stream(3, "partition", 0);
        let f = EsFactory { depth: 16 };
        let single = DecrementalGraph::new(1, &[]).unwrap();
        assert!(partition(&single.view(), 4.0, 2.0, &f, &mut rng).unwrap().is_empty());
        let edges: Vec<_> = (0..7).map(|i| (i, i + 1, 1)).collect();
        let path = DecrementalGraph::new(8, &edges).unwrap();
        let cut = partition(&path.view(), 2.0, 2.0, &f, &mut rng).unwrap();
        assert!(cut.iter().all(|&e| e < 7));
    }
}
