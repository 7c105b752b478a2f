//! Strongly connected components of a decremental graph with a nested generalized
//! topological order.
//!
//! Each component `X` owns the interval `[τ(X), τ(X) + |X|)`. When a deletion splits a
//! component, the SCCs of the old component are recomputed and packed left to right
//! inside its interval in condensation order, so intervals only ever shrink.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::graph::{EdgeId, GraphView, Vertex};

/// Handle of a node (a vertex set) in a refining partition. Handles are never reused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitChild {
    pub node: NodeId,
    pub tau: usize,
    pub members: Vec<Vertex>,
}

/// A node that was replaced by the listed children, which partition it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitEvent {
    pub parent: NodeId,
    pub parent_tau: usize,
    pub parent_size: usize,
    pub children: Vec<SplitChild>,
}

/// SCCs of `view` (restricted to its member set), each sorted, in no particular order.
pub fn strongly_connected(view: &GraphView<'_>) -> Vec<Vec<Vertex>> {
    let n = view.n();
    const UNSEEN: usize = usize::MAX;
    let mut index = alloc::vec![UNSEEN; n];
    let mut low = alloc::vec![0usize; n];
    let mut on_stack = alloc::vec![false; n];
    let mut stack = Vec::new();
    let mut frames: Vec<(Vertex, usize)> = Vec::new();
    let mut components = Vec::new();
    let mut counter = 0;

    for root in view.vertices() {
        if index[root] != UNSEEN {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        frames.push((root, 0));
        while let Some(&(v, start)) = frames.last() {
            let ids = view.out_ids(v);
            let mut pos = start;
            let mut descend = None;
            while pos < ids.len() {
                let e = ids[pos];
                pos += 1;
                if !view.has_edge(e) {
                    continue;
                }
                let w = view.endpoints(e).1;
                if index[w] == UNSEEN {
                    descend = Some(w);
                    break;
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            }
            if let Some(frame) = frames.last_mut() {
                frame.1 = pos;
            }
            if let Some(w) = descend {
                index[w] = counter;
                low[w] = counter;
                counter += 1;
                stack.push(w);
                on_stack[w] = true;
                frames.push((w, 0));
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }
    components
}

/// SCCs of `view` in topological order of the condensation; among components with no
/// ordering constraint the one with the smaller minimum vertex comes first.
pub fn ordered_components(view: &GraphView<'_>) -> Vec<Vec<Vertex>> {
    let comps = strongly_connected(view);
    let n = view.n();
    let mut comp_of = alloc::vec![usize::MAX; n];
    for (i, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of[v] = i;
        }
    }
    let mut succ: Vec<BTreeSet<usize>> = alloc::vec![BTreeSet::new(); comps.len()];
    for (i, c) in comps.iter().enumerate() {
        for &v in c {
            for (_, w, _) in view.out_edges(v) {
                let j = comp_of[w];
                if j != i {
                    succ[i].insert(j);
                }
            }
        }
    }
    let mut indeg = alloc::vec![0usize; comps.len()];
    for s in &succ {
        for &j in s {
            indeg[j] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<(Vertex, usize)>> = comps
        .iter()
        .enumerate()
        .filter(|(i, _)| indeg[*i] == 0)
        .map(|(i, c)| Reverse((c[0], i)))
        .collect();
    let mut order = Vec::with_capacity(comps.len());
    while let Some(Reverse((_, i))) = ready.pop() {
        order.push(i);
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.push(Reverse((comps[j][0], j)));
            }
        }
    }
    debug_assert_eq!(order.len(), comps.len());
    let mut slots: Vec<Option<Vec<Vertex>>> = comps.into_iter().map(Some).collect();
    order.into_iter().map(|i| slots[i].take().expect("component emitted twice")).collect()
}

#[derive(Clone, Debug)]
struct NodeRecord {
    members: Vec<Vertex>,
    tau: usize,
    size: usize,
    alive: bool,
}

/// A refining partition of a host vertex set together with nested interval labels.
#[derive(Clone, Debug)]
pub struct SccTopo {
    node_of: Vec<Option<NodeId>>,
    nodes: Vec<NodeRecord>,
    host_size: usize,
    live: usize,
}

impl SccTopo {
    /// The SCC partition of `view` with labels following the condensation order.
    pub fn compute(view: &GraphView<'_>) -> Self {
        let comps = ordered_components(view);
        Self::from_ordered(view.n(), comps)
    }

    /// Singleton partition whose labels follow the condensation order of `view`, with
    /// vertices of one SCC laid out by id.
    pub fn singletons(view: &GraphView<'_>) -> Self {
        let comps = ordered_components(view);
        let singles = comps.into_iter().flatten().map(|v| alloc::vec![v]).collect();
        Self::from_ordered(view.n(), singles)
    }

    /// Builds the state from components listed in label order.
    pub fn from_ordered(n: usize, comps: Vec<Vec<Vertex>>) -> Self {
        let mut topo = Self { node_of: alloc::vec![None; n], nodes: Vec::new(), host_size: 0, live: 0 };
        let mut tau = 0;
        for comp in comps {
            let size = comp.len();
            topo.push_node(comp, tau);
            tau += size;
        }
        topo.host_size = tau;
        topo
    }

    fn push_node(&mut self, members: Vec<Vertex>, tau: usize) -> NodeId {
        let id = NodeId(u32::try_from(self.nodes.len()).expect("node handle overflow"));
        for &v in &members {
            self.node_of[v] = Some(id);
        }
        self.nodes.push(NodeRecord { size: members.len(), members, tau, alive: true });
        self.live += 1;
        id
    }

    /// Number of vertices covered (labels live in `[0, host_size)`).
    pub fn host_size(&self) -> usize {
        self.host_size
    }

    pub fn node_count(&self) -> usize {
        self.live
    }

    pub fn node_of(&self, v: Vertex) -> NodeId {
        self.node_of[v].expect("vertex outside the host set")
    }

    pub fn try_node_of(&self, v: Vertex) -> Option<NodeId> {
        self.node_of[v]
    }

    pub fn tau(&self, x: NodeId) -> usize {
        self.nodes[x.index()].tau
    }

    pub fn size(&self, x: NodeId) -> usize {
        self.nodes[x.index()].size
    }

    pub fn members(&self, x: NodeId) -> &[Vertex] {
        &self.nodes[x.index()].members
    }

    pub fn is_alive(&self, x: NodeId) -> bool {
        self.nodes.get(x.index()).is_some_and(|r| r.alive)
    }

    /// Current nodes in handle order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, r)| r.alive)
            .map(|(i, _)| NodeId(i as u32))
    }

    /// Current nodes as `(node, τ, members)` in label order.
    pub fn ordered_nodes(&self) -> Vec<(NodeId, usize, &[Vertex])> {
        let mut out: Vec<_> = self.nodes().map(|x| (x, self.tau(x), self.members(x))).collect();
        out.sort_by_key(|&(_, tau, _)| tau);
        out
    }

    /// Re-splits every node that one of `deleted` ran inside of. `view` must be the graph
    /// after the deletions (forward orientation, same host).
    pub fn apply_deletions(&mut self, view: &GraphView<'_>, deleted: &[EdgeId]) -> Vec<SplitEvent> {
        let graph = view.graph();
        let mut affected = BTreeSet::new();
        for &e in deleted {
            let edge = graph.edge(e);
            if let (Some(a), Some(b)) = (self.node_of[edge.tail], self.node_of[edge.head]) {
                if a == b && self.size(a) > 1 {
                    affected.insert(a);
                }
            }
        }
        let mut scratch = alloc::vec![false; view.n()];
        let mut events = Vec::new();
        for x in affected {
            if let Some(ev) = self.resplit(view, x, &mut scratch) {
                events.push(ev);
            }
        }
        events
    }

    /// Re-splits all non-singleton nodes whose SCC structure changed in `view`.
    pub fn refresh_all(&mut self, view: &GraphView<'_>) -> Vec<SplitEvent> {
        let candidates: Vec<NodeId> = self.nodes().filter(|&x| self.size(x) > 1).collect();
        let mut scratch = alloc::vec![false; view.n()];
        candidates
            .into_iter()
            .filter_map(|x| self.resplit(view, x, &mut scratch))
            .collect()
    }

    fn resplit(&mut self, view: &GraphView<'_>, x: NodeId, scratch: &mut [bool]) -> Option<SplitEvent> {
        for &v in self.members(x) {
            scratch[v] = true;
        }
        let comps = ordered_components(&view.forward().with_members(scratch));
        for &v in self.members(x) {
            scratch[v] = false;
        }
        if comps.len() <= 1 {
            return None;
        }
        let parent_tau = self.tau(x);
        let parent_size = self.size(x);
        let record = &mut self.nodes[x.index()];
        record.alive = false;
        record.members = Vec::new();
        self.live -= 1;
        let mut tau = parent_tau;
        let mut children = Vec::with_capacity(comps.len());
        for comp in comps {
            let size = comp.len();
            let node = self.push_node(comp.clone(), tau);
            children.push(SplitChild { node, tau, members: comp });
            tau += size;
        }
        Some(SplitEvent { parent: x, parent_tau, parent_size, children })
    }

    /// Overwrites a label; only for building corrupted fixtures in audits.
    #[doc(hidden)]
    pub fn force_tau(&mut self, x: NodeId, tau: usize) {
        self.nodes[x.index()].tau = tau;
    }
}
