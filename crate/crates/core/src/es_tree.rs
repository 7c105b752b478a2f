//! Even–Shiloach trees for weighted digraphs, truncated at a depth cap.
//!
//! A vertex whose tree edge breaks rescans its in-edges from a cursor; when no in-edge
//! witnesses its current estimate the estimate grows by one and the cursor restarts.
//! Estimates therefore stay exact truncated distances.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::Result;
use crate::graph::{AppliedUpdate, DecrementalGraph, EdgeId, GraphView, Vertex, Weight, INF};
use crate::paths::dijkstra;
use crate::sssp::{Host, RestrictedSssp, SsspFactory};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Directions {
    Out,
    In,
    Both,
}

/// One ES tree. `reversed` trees hold distances *to* the root.
#[derive(Clone, Debug)]
pub struct EsTree {
    root: Vertex,
    cap: Weight,
    reversed: bool,
    host: Host,
    dist: Vec<Weight>,
    parent: Vec<Option<EdgeId>>,
    cursor: Vec<usize>,
    queue: BTreeSet<(Weight, Vertex)>,
    scans: u64,
    generation: u64,
}

impl EsTree {
    pub fn build(graph: &DecrementalGraph, host: Host, root: Vertex, cap: Weight, reversed: bool) -> Self {
        let n = graph.n();
        let mut tree = Self {
            root,
            cap,
            reversed,
            host,
            dist: Vec::new(),
            parent: Vec::new(),
            cursor: alloc::vec![0; n],
            queue: BTreeSet::new(),
            scans: 0,
            generation: 0,
        };
        let sp = dijkstra(&tree.view(graph), root, cap);
        tree.dist = sp.dist;
        tree.parent = sp.parent;
        tree
    }

    fn view<'a>(&'a self, graph: &'a DecrementalGraph) -> GraphView<'a> {
        let view = self.host.view(graph);
        if self.reversed {
            view.reversed()
        } else {
            view
        }
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn cap(&self) -> Weight {
        self.cap
    }

    pub fn dist(&self, v: Vertex) -> Weight {
        self.dist[v]
    }

    pub fn distances(&self) -> &[Weight] {
        &self.dist
    }

    pub fn parent(&self, v: Vertex) -> Option<EdgeId> {
        self.parent[v]
    }

    /// In-edge inspections performed by repairs so far.
    pub fn scans(&self) -> u64 {
        self.scans
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn handle_update(&mut self, graph: &DecrementalGraph, update: &AppliedUpdate) {
        let e = update.edge;
        if !self.host.members[update.tail] || !self.host.members[update.head] {
            return;
        }
        if self.host.excluded.as_ref().is_some_and(|x| x[e]) {
            return;
        }
        let (tail, head) = if self.reversed { (update.head, update.tail) } else { (update.tail, update.head) };
        if self.parent[head] != Some(e) {
            return;
        }
        let still_valid = self.dist[tail] != INF
            && update.new_weight != INF
            && self.dist[tail] + update.new_weight <= self.dist[head];
        if !still_valid {
            self.detach(head);
        }
        self.settle(graph);
    }

    /// Removes `removed` from the host, as if all their edges were deleted.
    pub fn remove_vertices(&mut self, graph: &DecrementalGraph, removed: &[Vertex]) {
        for &v in removed {
            self.host.members[v] = false;
        }
        if removed.iter().any(|&v| v == self.root) {
            for v in 0..self.dist.len() {
                self.set_dist(v, INF);
                self.parent[v] = None;
            }
            self.queue.clear();
            return;
        }
        for &v in removed {
            self.queue.remove(&(self.dist[v], v));
            self.set_dist(v, INF);
            self.parent[v] = None;
            let ids: Vec<EdgeId> = self.view(graph).out_ids(v).to_vec();
            for e in ids {
                let edge = graph.edge(e);
                let head = if self.reversed { edge.tail } else { edge.head };
                if self.host.members[head] && self.parent[head] == Some(e) {
                    detach(&mut self.parent, &self.dist, &mut self.queue, head);
                }
            }
        }
        self.settle(graph);
    }

    fn set_dist(&mut self, v: Vertex, d: Weight) {
        if self.dist[v] != d {
            self.dist[v] = d;
            self.generation += 1;
        }
    }

    fn detach(&mut self, v: Vertex) {
        detach(&mut self.parent, &self.dist, &mut self.queue, v);
    }

    fn settle(&mut self, graph: &DecrementalGraph) {
        let Self { host, reversed, dist, parent, cursor, queue, scans, generation, cap, .. } = self;
        let view = if *reversed { host.view(graph).reversed() } else { host.view(graph) };
        while let Some((d, y)) = queue.pop_first() {
            debug_assert_eq!(d, dist[y]);
            let ids = view.in_ids(y);
            let mut pos = cursor[y];
            let mut witness = None;
            while pos < ids.len() {
                let e = ids[pos];
                *scans += 1;
                if view.has_edge(e) {
                    let x = view.endpoints(e).0;
                    if dist[x] != INF && dist[x].saturating_add(view.weight(e)) <= d {
                        witness = Some(e);
                        break;
                    }
                }
                pos += 1;
            }
            if let Some(e) = witness {
                cursor[y] = pos;
                parent[y] = Some(e);
                continue;
            }
            cursor[y] = 0;
            let next = if d >= *cap { INF } else { d + 1 };
            dist[y] = next;
            *generation += 1;
            if next != INF {
                queue.insert((next, y));
            } else {
                parent[y] = None;
            }
            for &e in view.out_ids(y) {
                let head = view.endpoints(e).1;
                if parent[head] == Some(e) {
                    let ok = next != INF
                        && view.has_edge(e)
                        && next.saturating_add(view.weight(e)) <= dist[head];
                    if !ok {
                        detach(parent, dist, queue, head);
                    }
                }
            }
        }
    }
}

fn detach(parent: &mut [Option<EdgeId>], dist: &[Weight], queue: &mut BTreeSet<(Weight, Vertex)>, v: Vertex) {
    parent[v] = None;
    if dist[v] != INF {
        queue.insert((dist[v], v));
    }
}

/// ES trees from and/or to a root, exposed through [`RestrictedSssp`] (exact, so α = 1).
#[derive(Clone, Debug)]
pub struct EsSssp {
    out: Option<EsTree>,
    inn: Option<EsTree>,
    root: Vertex,
    cap: Weight,
}

impl EsSssp {
    pub fn build(graph: &DecrementalGraph, host: Host, root: Vertex, cap: Weight, directions: Directions) -> Self {
        let out = matches!(directions, Directions::Out | Directions::Both)
            .then(|| EsTree::build(graph, host.clone(), root, cap, false));
        let inn = matches!(directions, Directions::In | Directions::Both)
            .then(|| EsTree::build(graph, host, root, cap, true));
        Self { out, inn, root, cap }
    }

    pub fn out_tree(&self) -> Option<&EsTree> {
        self.out.as_ref()
    }

    pub fn in_tree(&self) -> Option<&EsTree> {
        self.inn.as_ref()
    }

    pub fn scans(&self) -> u64 {
        self.out.as_ref().map_or(0, EsTree::scans) + self.inn.as_ref().map_or(0, EsTree::scans)
    }
}

impl RestrictedSssp for EsSssp {
    fn root(&self) -> Vertex {
        self.root
    }

    fn depth(&self) -> Weight {
        self.cap
    }

    fn from_root(&self, v: Vertex) -> Weight {
        self.out.as_ref().map_or(INF, |t| t.dist(v))
    }

    fn to_root(&self, v: Vertex) -> Weight {
        self.inn.as_ref().map_or(INF, |t| t.dist(v))
    }

    fn handle_update(&mut self, graph: &DecrementalGraph, update: &AppliedUpdate) {
        for t in self.out.iter_mut().chain(self.inn.iter_mut()) {
            t.handle_update(graph, update);
        }
    }

    fn remove_vertices(&mut self, graph: &DecrementalGraph, removed: &[Vertex]) {
        for t in self.out.iter_mut().chain(self.inn.iter_mut()) {
            t.remove_vertices(graph, removed);
        }
    }

    fn generation(&self) -> u64 {
        self.out.as_ref().map_or(0, EsTree::generation) + self.inn.as_ref().map_or(0, EsTree::generation)
    }
}

/// Builds two-sided ES trees on exactly the requested host.
#[derive(Clone, Copy, Debug)]
pub struct EsFactory {
    pub depth: Weight,
}

impl SsspFactory for EsFactory {
    fn depth(&self) -> Weight {
        self.depth
    }

    fn build(&self, graph: &DecrementalGraph, host: Host, root: Vertex) -> Result<Box<dyn RestrictedSssp>> {
        Ok(Box::new(EsSssp::build(graph, host, root, self.depth, Directions::Both)))
    }
}
