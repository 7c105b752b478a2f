//! Exact oracles and invariant auditors.
//!
//! Nothing here mutates the structures it inspects.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ato::Ato;
use crate::graph::{DecrementalGraph, EdgeId, GraphView, Vertex, Weight, INF};
use crate::paths::{dijkstra, hop_bounded};
use crate::rng::Rng;
use crate::scc_topo::{strongly_connected, SccTopo};
use crate::separator::out_separator;

/// Above this many vertices the weak-diameter audit samples sources instead of sweeping all.
pub const EXACT_DIAMETER_LIMIT: usize = 512;

/// Exact distances from `root`.
pub fn dijkstra_oracle(view: &GraphView<'_>, root: Vertex) -> Vec<Weight> {
    dijkstra(view, root, INF).dist
}

/// Exact distances from `source` over paths with at most `hops` edges.
pub fn hop_bounded_oracle(view: &GraphView<'_>, source: Vertex, hops: usize) -> Vec<Weight> {
    hop_bounded(view, source, hops)
}

/// Hop-bounded distances from the node of `source` in the multigraph obtained by
/// contracting every node of `topo`, over the given vertex-level arcs. Arcs inside a node
/// or touching a vertex outside `hosted` are dropped. Returns one value per vertex.
pub fn contracted_hop_bounded(
    topo: &SccTopo,
    arcs: &[(Vertex, Vertex, Weight)],
    hosted: Option<&[bool]>,
    source: Vertex,
    hops: usize,
) -> Vec<Weight> {
    let n = topo.host_size();
    let node = |v: Vertex| topo.node_of(v).index();
    let slots = (0..n).map(node).max().map_or(0, |m| m + 1);
    let keep = |v: Vertex| hosted.is_none_or(|h| h[v]);
    let live: Vec<(usize, usize, Weight)> = arcs
        .iter()
        .filter(|&&(t, h, w)| w != INF && keep(t) && keep(h) && node(t) != node(h))
        .map(|&(t, h, w)| (node(t), node(h), w))
        .collect();
    let mut dist = alloc::vec![INF; slots];
    if keep(source) {
        dist[node(source)] = 0;
    }
    for _ in 0..hops {
        let mut next = dist.clone();
        for &(a, b, w) in &live {
            if dist[a] != INF {
                next[b] = next[b].min(dist[a].saturating_add(w));
            }
        }
        if next == dist {
            break;
        }
        dist = next;
    }
    (0..n).map(|v| if keep(v) { dist[node(v)] } else { INF }).collect()
}

/// Live edges of `graph` as arcs, flipped when `reversed`.
pub fn graph_arcs(graph: &DecrementalGraph, reversed: bool) -> Vec<(Vertex, Vertex, Weight)> {
    graph
        .live_edges()
        .map(|(_, e)| if reversed { (e.head, e.tail, e.weight) } else { (e.tail, e.head, e.weight) })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContractVerdict {
    Ok,
    /// The estimate is a valid overestimate but the pair is outside the range the upper
    /// bound speaks about.
    OutOfRange,
    LowerViolated,
    UpperViolated,
}

impl ContractVerdict {
    pub fn is_violation(self) -> bool {
        matches!(self, Self::LowerViolated | Self::UpperViolated)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::OutOfRange => "out-of-range",
            Self::LowerViolated => "lower-violated",
            Self::UpperViolated => "upper-violated",
        }
    }
}

/// Checks `exact ≤ estimate` always and `estimate ≤ (1+ε)·exact + additive` when
/// `in_range`. Unreachable vertices must be reported as `INF`.
pub fn check_estimate(exact: Weight, estimate: Weight, epsilon: f64, additive: Weight, in_range: bool) -> ContractVerdict {
    if estimate < exact {
        return ContractVerdict::LowerViolated;
    }
    if exact == INF || !in_range {
        return ContractVerdict::OutOfRange;
    }
    let bound = (1.0 + epsilon) * exact as f64 + additive as f64;
    if estimate as f64 > bound + 1e-9 {
        ContractVerdict::UpperViolated
    } else {
        ContractVerdict::Ok
    }
}

/// One row of an estimate-versus-oracle comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub stage: u64,
    pub vertex: Vertex,
    pub exact: Weight,
    pub estimate: Weight,
    pub ratio: f64,
    pub verdict: ContractVerdict,
}

impl OracleReport {
    pub fn new(stage: u64, vertex: Vertex, exact: Weight, estimate: Weight, verdict: ContractVerdict) -> Self {
        let ratio = if exact == 0 || exact == INF || estimate == INF {
            if estimate == exact { 1.0 } else { f64::INFINITY }
        } else {
            estimate as f64 / exact as f64
        };
        Self { stage, vertex, exact, estimate, ratio, verdict }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtoCheck {
    /// The nodes partition the vertex set and agree with the vertex-to-node map.
    Partition,
    /// Every node lies inside a node of the previous audit.
    Refinement,
    /// Label intervals lie in `[0, n)` and are pairwise disjoint.
    IntervalDisjoint,
    /// Every node's interval lies inside the interval its vertices had before.
    IntervalNesting,
    /// The nodes are exactly the SCCs of the pruned graph, labelled in topological order.
    TopologicalOrder,
    /// Every node `X` has weak diameter at most `|X|·η/n` in the full graph.
    WeakDiameter,
    /// Every node with more than one vertex has exactly one center, inside it.
    Centers,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditVerdict {
    pub check: AtoCheck,
    pub passed: bool,
    pub detail: Option<String>,
}

impl AuditVerdict {
    fn pass(check: AtoCheck) -> Self {
        Self { check, passed: true, detail: None }
    }

    fn fail(check: AtoCheck, detail: String) -> Self {
        Self { check, passed: false, detail: Some(detail) }
    }
}

/// Audits successive states of one order and remembers what it saw, so refinement and
/// nesting can be checked across stages.
#[derive(Clone, Debug, Default)]
pub struct AtoAuditor {
    /// Per vertex: previous node key and interval `[lo, hi)`.
    previous: Option<Vec<(usize, usize, usize)>>,
}

impl AtoAuditor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Checks every order property on `ato` against the current `graph`.
    pub fn audit(&mut self, ato: &Ato, graph: &DecrementalGraph) -> Vec<AuditVerdict> {
        let mut out = self.audit_topo(ato.topo(), &ato.pruned(graph));
        out.push(audit_weak_diameter(ato.topo(), graph, ato.eta_diam(), None));
        out.push(audit_centers(ato));
        out
    }

    /// Structural checks only: partition, refinement, intervals and the topological order
    /// of `pruned`.
    pub fn audit_topo(&mut self, topo: &SccTopo, pruned: &GraphView<'_>) -> Vec<AuditVerdict> {
        let n = pruned.n();
        let mut out = Vec::new();
        out.push(audit_partition(topo, n));
        out.push(audit_intervals(topo, n));

        let current: Vec<(usize, usize, usize)> = (0..n)
            .map(|v| match topo.try_node_of(v) {
                Some(x) => (x.index(), topo.tau(x), topo.tau(x) + topo.size(x)),
                None => (usize::MAX, 0, 0),
            })
            .collect();
        match &self.previous {
            None => {
                out.push(AuditVerdict::pass(AtoCheck::Refinement));
                out.push(AuditVerdict::pass(AtoCheck::IntervalNesting));
            }
            Some(prev) => {
                let mut refinement = AuditVerdict::pass(AtoCheck::Refinement);
                let mut nesting = AuditVerdict::pass(AtoCheck::IntervalNesting);
                for x in topo.nodes() {
                    let members = topo.members(x);
                    let first = prev[members[0]].0;
                    if let Some(&v) = members.iter().find(|&&v| prev[v].0 != first) {
                        refinement = AuditVerdict::fail(
                            AtoCheck::Refinement,
                            format!("node with {} and {} spans two earlier nodes", members[0], v),
                        );
                    }
                    let (lo, hi) = (topo.tau(x), topo.tau(x) + topo.size(x));
                    if let Some(&v) = members.iter().find(|&&v| lo < prev[v].1 || hi > prev[v].2) {
                        nesting = AuditVerdict::fail(
                            AtoCheck::IntervalNesting,
                            format!("interval [{lo}, {hi}) of vertex {v} escapes [{}, {})", prev[v].1, prev[v].2),
                        );
                    }
                }
                out.push(refinement);
                out.push(nesting);
            }
        }
        self.previous = Some(current);
        out.push(audit_topological_order(topo, pruned));
        out
    }
}

fn audit_partition(topo: &SccTopo, n: usize) -> AuditVerdict {
    let mut seen = alloc::vec![false; n];
    for x in topo.nodes() {
        for &v in topo.members(x) {
            if seen[v] {
                return AuditVerdict::fail(AtoCheck::Partition, format!("vertex {v} is in two nodes"));
            }
            seen[v] = true;
            if topo.try_node_of(v) != Some(x) {
                return AuditVerdict::fail(AtoCheck::Partition, format!("vertex {v} maps to the wrong node"));
            }
        }
        if topo.members(x).len() != topo.size(x) {
            return AuditVerdict::fail(AtoCheck::Partition, format!("node {} has a stale size", x.index()));
        }
    }
    match seen.iter().position(|&s| !s) {
        Some(v) => AuditVerdict::fail(AtoCheck::Partition, format!("vertex {v} is in no node")),
        None => AuditVerdict::pass(AtoCheck::Partition),
    }
}

fn audit_intervals(topo: &SccTopo, n: usize) -> AuditVerdict {
    let nodes = topo.ordered_nodes();
    let mut end = 0;
    for (x, tau, members) in nodes {
        if tau < end {
            return AuditVerdict::fail(AtoCheck::IntervalDisjoint, format!("node {} overlaps its predecessor", x.index()));
        }
        end = tau + members.len();
    }
    if end > n {
        return AuditVerdict::fail(AtoCheck::IntervalDisjoint, format!("labels reach {end} > {n}"));
    }
    AuditVerdict::pass(AtoCheck::IntervalDisjoint)
}

fn audit_topological_order(topo: &SccTopo, pruned: &GraphView<'_>) -> AuditVerdict {
    let n = pruned.n();
    let mut comp_of = alloc::vec![usize::MAX; n];
    for (i, comp) in strongly_connected(pruned).iter().enumerate() {
        for &v in comp {
            comp_of[v] = i;
        }
    }
    for x in topo.nodes() {
        let members = topo.members(x);
        let c = comp_of[members[0]];
        if members.iter().any(|&v| comp_of[v] != c) {
            return AuditVerdict::fail(AtoCheck::TopologicalOrder, format!("node {} is not strongly connected", x.index()));
        }
    }
    for e in pruned.edge_ids() {
        let (u, v) = pruned.endpoints(e);
        let (a, b) = (topo.node_of(u), topo.node_of(v));
        if a != b {
            if comp_of[u] == comp_of[v] {
                return AuditVerdict::fail(AtoCheck::TopologicalOrder, format!("SCC of {u} and {v} is split"));
            }
            if topo.tau(a) >= topo.tau(b) {
                return AuditVerdict::fail(AtoCheck::TopologicalOrder, format!("edge ({u}, {v}) points backwards"));
            }
        }
    }
    AuditVerdict::pass(AtoCheck::TopologicalOrder)
}

/// Checks `diam(X, G) · n ≤ η · |X|` for every node. With `sample = Some(k)` only the
/// first `k` members of each node act as sources; otherwise graphs above
/// [`EXACT_DIAMETER_LIMIT`] vertices use 16 sources per node.
pub fn audit_weak_diameter(topo: &SccTopo, graph: &DecrementalGraph, eta: Weight, sample: Option<usize>) -> AuditVerdict {
    let n = graph.n();
    let sources = sample.unwrap_or(if n > EXACT_DIAMETER_LIMIT { 16 } else { usize::MAX });
    let view = graph.view();
    for x in topo.nodes() {
        let members = topo.members(x);
        if members.len() <= 1 {
            continue;
        }
        let budget = u128::from(eta) * members.len() as u128;
        for &u in members.iter().take(sources) {
            let fwd = dijkstra(&view, u, INF).dist;
            let bwd = dijkstra(&view.reversed(), u, INF).dist;
            for &v in members {
                for (a, b, d) in [(u, v, fwd[v]), (v, u, bwd[v])] {
                    if d == INF || u128::from(d) * n as u128 > budget {
                        return AuditVerdict::fail(
                            AtoCheck::WeakDiameter,
                            format!("dist({a}, {b}) = {d} exceeds {}·{}/{n}", members.len(), eta),
                        );
                    }
                }
            }
        }
    }
    AuditVerdict::pass(AtoCheck::WeakDiameter)
}

fn audit_centers(ato: &Ato) -> AuditVerdict {
    let topo = ato.topo();
    if ato.is_trivial() {
        return AuditVerdict::pass(AtoCheck::Centers);
    }
    let mut owners = alloc::vec![0usize; ato.n()];
    for c in ato.center_structures() {
        owners[topo.tau(topo.node_of(c))] += 1;
    }
    for x in topo.nodes() {
        let Some(c) = ato.center(x) else {
            return AuditVerdict::fail(AtoCheck::Centers, format!("node {} has no center", x.index()));
        };
        if topo.try_node_of(c) != Some(x) {
            return AuditVerdict::fail(AtoCheck::Centers, format!("center {c} lies outside its node"));
        }
        let structures = owners[topo.tau(x)];
        let expected = usize::from(topo.size(x) > 1);
        if structures != expected {
            return AuditVerdict::fail(
                AtoCheck::Centers,
                format!("node {} runs {structures} center structures", x.index()),
            );
        }
    }
    AuditVerdict::pass(AtoCheck::Centers)
}

/// Per-edge outcome of repeated separator draws from a fixed root.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeCutStat {
    pub edge: EdgeId,
    /// Trials whose radius reached the tail, failed ones included.
    pub tail_in_ball: u64,
    /// Of those, trials that cut the edge.
    pub cut: u64,
    /// `(ζ/d)·w(e)`.
    pub bound: f64,
}

impl EdgeCutStat {
    pub fn frequency(&self) -> f64 {
        if self.tail_in_ball == 0 { 0.0 } else { self.cut as f64 / self.tail_in_ball as f64 }
    }

    /// Frequency minus the bound, in units of the binomial standard deviation at the bound.
    pub fn excess_sigmas(&self) -> f64 {
        if self.tail_in_ball == 0 || self.bound >= 1.0 {
            return f64::NEG_INFINITY;
        }
        let sigma = libm::sqrt(self.bound * (1.0 - self.bound) / self.tail_in_ball as f64);
        (self.frequency() - self.bound) / sigma.max(f64::MIN_POSITIVE)
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.excess_sigmas() <= sigmas
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparatorStats {
    pub trials: u64,
    pub failures: u64,
    pub zeta: f64,
    pub edges: Vec<EdgeCutStat>,
}

impl SeparatorStats {
    pub fn failure_fraction(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }

    /// Distance of the failure fraction from `e^{−ζ}` in binomial standard deviations.
    pub fn failure_sigmas(&self) -> f64 {
        let p = libm::exp(-self.zeta);
        let sigma = libm::sqrt(p * (1.0 - p) / self.trials as f64);
        libm::fabs(self.failure_fraction() - p) / sigma
    }
}

/// Runs `trials` independent separators from `root` with depth `d` and records failures
/// and, per edge, how often it was cut given that its tail was in the ball.
pub fn separator_stats(view: &GraphView<'_>, root: Vertex, d: f64, zeta: f64, trials: u64, rng: &mut Rng) -> SeparatorStats {
    let m = view.graph().initial_edge_count();
    let mut in_ball = alloc::vec![0u64; m];
    let mut cut = alloc::vec![0u64; m];
    let mut failures = 0;
    // A failed trial still conditions every edge whose tail lies within the drawn radius;
    // such edges count as uncut.
    let dist = dijkstra_oracle(view, root);
    for _ in 0..trials {
        let sep = out_separator(root, view, d, zeta, rng);
        if sep.failed {
            failures += 1;
            for e in view.edge_ids() {
                let tail = view.endpoints(e).0;
                if dist[tail] != INF && dist[tail] as f64 <= sep.radius {
                    in_ball[e] += 1;
                }
            }
            continue;
        }
        for &v in &sep.vertices {
            for (e, _, _) in view.out_edges(v) {
                in_ball[e] += 1;
            }
        }
        for &e in &sep.edges {
            cut[e] += 1;
        }
    }
    let edges = view
        .edge_ids()
        .map(|e| EdgeCutStat { edge: e, tail_in_ball: in_ball[e], cut: cut[e], bound: zeta / d * view.weight(e) as f64 })
        .collect();
    SeparatorStats { trials, failures, zeta, edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::named_stream;

    #[test]
    fn oracles_on_small_graphs() {
        let g = DecrementalGraph::new(4, &[(0, 1, 7), (1, 2, 1), (2, 3, 1)]).unwrap();
        assert_eq!(dijkstra_oracle(&g.view(), 0), [0, 7, 8, 9]);
        assert_eq!(hop_bounded_oracle(&g.view(), 0, 0), [0, INF, INF, INF]);
        assert_eq!(hop_bounded_oracle(&g.view(), 0, 2), [0, 7, 8, INF]);
        assert_eq!(dijkstra_oracle(&g.view(), 3), [INF, INF, INF, 0]);
    }

    #[test]
    fn verdicts() {
        assert_eq!(check_estimate(4, 3, 0.5, 0, true), ContractVerdict::LowerViolated);
        assert_eq!(check_estimate(4, 6, 0.5, 0, true), ContractVerdict::Ok);
        assert_eq!(check_estimate(4, 7, 0.5, 0, true), ContractVerdict::UpperViolated);
        assert_eq!(check_estimate(4, 7, 0.5, 0, false), ContractVerdict::OutOfRange);
        assert_eq!(check_estimate(INF, INF, 0.5, 0, true), ContractVerdict::OutOfRange);
    }

    #[test]
    fn corrupted_labels_fail_the_interval_audit() {
        let g = DecrementalGraph::new(3, &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let mut topo = SccTopo::compute(&g.view());
        let mut auditor = AtoAuditor::new();
        assert!(auditor.audit_topo(&topo, &g.view()).iter().all(|v| v.passed));
        let x = topo.node_of(2);
        topo.force_tau(x, 1);
        let verdicts = AtoAuditor::new().audit_topo(&topo, &g.view());
        assert!(verdicts.iter().any(|v| v.check == AtoCheck::IntervalDisjoint && !v.passed));
    }

    #[test]
    fn unreachable_edges_are_never_cut() {
        let g = DecrementalGraph::new(3, &[(0, 1, 1), (2, 0, 1)]).unwrap();
        let mut rng = named_stream(4, "stats", 0);
        let stats = separator_stats(&g.view(), 0, 4.0, 2.0, 1000, &mut rng);
        let back = stats.edges.iter().find(|s| s.edge == 1).unwrap();
        assert_eq!((back.tail_in_ball, back.cut), (0, 0));
    }
}
