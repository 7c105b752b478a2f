//! Versioned decremental digraph and the views every other module reads through.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub type Vertex = usize;
pub type EdgeId = usize;
pub type Weight = u64;

/// Distance / weight sentinel for "unreachable" and "deleted".
pub const INF: Weight = Weight::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: Vertex,
    pub head: Vertex,
    /// Current weight; `INF` once deleted.
    pub weight: Weight,
}

impl Edge {
    pub fn is_live(&self) -> bool {
        self.weight != INF
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UpdateKind {
    Delete,
    Increase(Weight),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UpdateEvent {
    pub tail: Vertex,
    pub head: Vertex,
    pub kind: UpdateKind,
}

impl UpdateEvent {
    pub fn delete(tail: Vertex, head: Vertex) -> Self {
        Self { tail, head, kind: UpdateKind::Delete }
    }

    pub fn increase(tail: Vertex, head: Vertex, weight: Weight) -> Self {
        Self { tail, head, kind: UpdateKind::Increase(weight) }
    }
}

/// What an update did to the graph, handed to every structure that tracks it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AppliedUpdate {
    pub edge: EdgeId,
    pub tail: Vertex,
    pub head: Vertex,
    pub old_weight: Weight,
    pub new_weight: Weight,
    pub version: u64,
}

impl AppliedUpdate {
    pub fn is_deletion(&self) -> bool {
        self.new_weight == INF
    }
}

/// A weighted digraph that only loses edges or sees weights grow.
///
/// Edge ids are stable: deleted edges stay in the adjacency arrays with weight `INF`.
#[derive(Clone, Debug)]
pub struct DecrementalGraph {
    n: usize,
    edges: Vec<Edge>,
    initial: Vec<Weight>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
    index: BTreeMap<(Vertex, Vertex), EdgeId>,
    live: usize,
    version: u64,
    log: Vec<UpdateEvent>,
}

impl DecrementalGraph {
    pub fn new(n: usize, edge_list: &[(Vertex, Vertex, Weight)]) -> Result<Self> {
        let mut g = Self {
            n,
            edges: Vec::with_capacity(edge_list.len()),
            initial: Vec::with_capacity(edge_list.len()),
            out_adj: alloc::vec![Vec::new(); n],
            in_adj: alloc::vec![Vec::new(); n],
            index: BTreeMap::new(),
            live: 0,
            version: 0,
            log: Vec::new(),
        };
        for &(tail, head, weight) in edge_list {
            for vertex in [tail, head] {
                if vertex >= n {
                    return Err(Error::VertexOutOfRange { vertex, n });
                }
            }
            if tail == head {
                return Err(Error::SelfLoop(tail));
            }
            if weight == 0 || weight == INF {
                return Err(Error::WeightOutOfRange { tail, head, weight });
            }
            let id = g.edges.len();
            if g.index.insert((tail, head), id).is_some() {
                return Err(Error::DuplicateEdge { tail, head });
            }
            g.edges.push(Edge { tail, head, weight });
            g.initial.push(weight);
            g.out_adj[tail].push(id);
            g.in_adj[head].push(id);
        }
        g.live = g.edges.len();
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges at version 0.
    pub fn initial_edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn live_edge_count(&self) -> usize {
        self.live
    }

    /// Largest initial edge weight (weights live in `[1, W]`); 1 for an edgeless graph.
    pub fn weight_bound(&self) -> Weight {
        self.initial.iter().copied().max().unwrap_or(1)
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn log(&self) -> &[UpdateEvent] {
        &self.log
    }

    pub fn edge(&self, e: EdgeId) -> Edge {
        self.edges[e]
    }

    pub fn weight(&self, e: EdgeId) -> Weight {
        self.edges[e].weight
    }

    pub fn initial_weight(&self, e: EdgeId) -> Weight {
        self.initial[e]
    }

    pub fn find_edge(&self, tail: Vertex, head: Vertex) -> Option<EdgeId> {
        self.index.get(&(tail, head)).copied()
    }

    /// Raw out-adjacency including tombstones.
    pub fn out_ids(&self, v: Vertex) -> &[EdgeId] {
        &self.out_adj[v]
    }

    /// Raw in-adjacency including tombstones.
    pub fn in_ids(&self, v: Vertex) -> &[EdgeId] {
        &self.in_adj[v]
    }

    /// Live edges in id order.
    pub fn live_edges(&self) -> impl Iterator<Item = (EdgeId, Edge)> + '_ {
        self.edges.iter().copied().enumerate().filter(|(_, e)| e.is_live())
    }

    pub fn apply_update(&mut self, event: UpdateEvent) -> Result<AppliedUpdate> {
        let UpdateEvent { tail, head, kind } = event;
        let missing = Error::MissingEdge { tail, head };
        let id = self.find_edge(tail, head).ok_or(missing.clone())?;
        let current = self.edges[id].weight;
        if current == INF {
            return Err(missing);
        }
        let new_weight = match kind {
            UpdateKind::Delete => INF,
            UpdateKind::Increase(w) if w == INF => {
                return Err(Error::WeightOutOfRange { tail, head, weight: w });
            }
            UpdateKind::Increase(w) if w <= current => {
                return Err(Error::NonMonotoneWeight { tail, head, current, requested: w });
            }
            UpdateKind::Increase(w) => w,
        };
        self.edges[id].weight = new_weight;
        if new_weight == INF {
            self.live -= 1;
        }
        self.version += 1;
        self.log.push(event);
        Ok(AppliedUpdate {
            edge: id,
            tail,
            head,
            old_weight: current,
            new_weight,
            version: self.version,
        })
    }

    /// Rebuilds the graph from its version-0 edges and replays the update log.
    pub fn replay(&self) -> Result<Self> {
        let base: Vec<_> = self
            .edges
            .iter()
            .zip(&self.initial)
            .map(|(e, &w)| (e.tail, e.head, w))
            .collect();
        let mut g = Self::new(self.n, &base)?;
        for &event in &self.log {
            g.apply_update(event)?;
        }
        Ok(g)
    }

    /// Current edge weights indexed by edge id (`INF` for deleted edges).
    pub fn weights(&self) -> Vec<Weight> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    pub fn view(&self) -> GraphView<'_> {
        GraphView { graph: self, members: None, excluded: None, reversed: false }
    }

    /// Live view of `G[X]` for the vertex mask `members`.
    pub fn induced<'a>(&'a self, members: &'a [bool]) -> GraphView<'a> {
        self.view().with_members(members)
    }
}

/// A borrowed, possibly restricted and possibly reversed view of a [`DecrementalGraph`].
///
/// `members` restricts the vertex set, `excluded` hides individual edge ids (used for
/// pruned graphs such as `G ∖ F`), and `reversed` flips every edge.
#[derive(Clone, Copy)]
pub struct GraphView<'a> {
    graph: &'a DecrementalGraph,
    members: Option<&'a [bool]>,
    excluded: Option<&'a [bool]>,
    reversed: bool,
}

impl<'a> GraphView<'a> {
    pub fn graph(&self) -> &'a DecrementalGraph {
        self.graph
    }

    /// Size of the vertex universe (not of the member set).
    pub fn n(&self) -> usize {
        self.graph.n
    }

    pub fn members(&self) -> Option<&'a [bool]> {
        self.members
    }

    pub fn excluded(&self) -> Option<&'a [bool]> {
        self.excluded
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn reversed(self) -> Self {
        Self { reversed: !self.reversed, ..self }
    }

    pub fn forward(self) -> Self {
        Self { reversed: false, ..self }
    }

    /// Replaces the member mask. Callers pass subsets of the previous members.
    pub fn with_members(self, members: &'a [bool]) -> Self {
        Self { members: Some(members), ..self }
    }

    pub fn without_edges(self, excluded: &'a [bool]) -> Self {
        Self { excluded: Some(excluded), ..self }
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.members.map_or(true, |m| m[v])
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + 'a {
        let members = self.members;
        (0..self.graph.n).filter(move |&v| members.map_or(true, |m| m[v]))
    }

    pub fn vertex_count(&self) -> usize {
        match self.members {
            Some(m) => m.iter().filter(|&&b| b).count(),
            None => self.graph.n,
        }
    }

    /// Raw ids of the edges leaving `v` in this orientation, including hidden ones.
    pub fn out_ids(&self, v: Vertex) -> &'a [EdgeId] {
        if self.reversed {
            &self.graph.in_adj[v]
        } else {
            &self.graph.out_adj[v]
        }
    }

    /// Raw ids of the edges entering `v` in this orientation, including hidden ones.
    pub fn in_ids(&self, v: Vertex) -> &'a [EdgeId] {
        self.reversed().out_ids(v)
    }

    pub fn weight(&self, e: EdgeId) -> Weight {
        self.graph.edges[e].weight
    }

    /// Whether edge `e` exists in this view.
    pub fn has_edge(&self, e: EdgeId) -> bool {
        let edge = self.graph.edges[e];
        edge.is_live()
            && self.excluded.map_or(true, |x| !x[e])
            && self.contains(edge.tail)
            && self.contains(edge.head)
    }

    /// Endpoints of `e` in this view's orientation.
    pub fn endpoints(&self, e: EdgeId) -> (Vertex, Vertex) {
        let edge = self.graph.edges[e];
        if self.reversed {
            (edge.head, edge.tail)
        } else {
            (edge.tail, edge.head)
        }
    }

    /// `(edge, head, weight)` for every edge leaving `v` in this view.
    pub fn out_edges(&self, v: Vertex) -> impl Iterator<Item = (EdgeId, Vertex, Weight)> + 'a {
        let view = *self;
        let ids = self.out_ids(v);
        let ok = self.contains(v);
        ids.iter().filter(move |_| ok).filter_map(move |&e| {
            if !view.has_edge(e) {
                return None;
            }
            let (_, head) = view.endpoints(e);
            Some((e, head, view.graph.edges[e].weight))
        })
    }

    /// `(edge, tail, weight)` for every edge entering `v` in this view.
    pub fn in_edges(&self, v: Vertex) -> impl Iterator<Item = (EdgeId, Vertex, Weight)> + 'a {
        self.reversed().out_edges(v)
    }

    /// Ids of the edges in this view.
    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + 'a {
        let view = *self;
        (0..self.graph.edges.len()).filter(move |&e| view.has_edge(e))
    }

    pub fn edge_count(&self) -> usize {
        self.edge_ids().count()
    }
}

/// Boolean mask over `0..n` with the listed vertices set.
pub fn vertex_mask(n: usize, vertices: &[Vertex]) -> Vec<bool> {
    let mut mask = alloc::vec![false; n];
    for &v in vertices {
        mask[v] = true;
    }
    mask
}
