//! Static shortest-path routines shared by the dynamic structures and the oracles.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::graph::{EdgeId, GraphView, Vertex, Weight, INF};

#[derive(Clone, Debug)]
pub struct ShortestPaths {
    pub dist: Vec<Weight>,
    /// Edge used to reach each vertex on a shortest path.
    pub parent: Vec<Option<EdgeId>>,
}

impl ShortestPaths {
    /// Vertex path from the source to `target`, following parent edges.
    pub fn path_to(&self, view: &GraphView<'_>, target: Vertex) -> Option<Vec<Vertex>> {
        if self.dist[target] == INF {
            return None;
        }
        let mut path = alloc::vec![target];
        let mut v = target;
        while let Some(e) = self.parent[v] {
            v = view.endpoints(e).0;
            path.push(v);
        }
        path.reverse();
        Some(path)
    }
}

/// Dijkstra from `source` in `view`; distances above `limit` are reported as `INF`.
pub fn dijkstra(view: &GraphView<'_>, source: Vertex, limit: Weight) -> ShortestPaths {
    let n = view.n();
    let mut dist = alloc::vec![INF; n];
    let mut parent = alloc::vec![None; n];
    if !view.contains(source) {
        return ShortestPaths { dist, parent };
    }
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for (e, head, w) in view.out_edges(v) {
            let nd = d.saturating_add(w);
            if nd <= limit && nd < dist[head] {
                dist[head] = nd;
                parent[head] = Some(e);
                heap.push(Reverse((nd, head)));
            }
        }
    }
    ShortestPaths { dist, parent }
}

/// Distances from `source` using at most `hops` edges (Bellman–Ford rounds).
pub fn hop_bounded(view: &GraphView<'_>, source: Vertex, hops: usize) -> Vec<Weight> {
    let n = view.n();
    let mut dist = alloc::vec![INF; n];
    if !view.contains(source) {
        return dist;
    }
    dist[source] = 0;
    let edges: Vec<EdgeId> = view.edge_ids().collect();
    for _ in 0..hops {
        let mut next = dist.clone();
        let mut changed = false;
        for &e in &edges {
            let (tail, head) = view.endpoints(e);
            if dist[tail] == INF {
                continue;
            }
            let nd = dist[tail].saturating_add(view.weight(e));
            if nd < next[head] {
                next[head] = nd;
                changed = true;
            }
        }
        dist = next;
        if !changed {
            break;
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DecrementalGraph;

    #[test]
    fn dijkstra_and_limit() {
        let g = DecrementalGraph::new(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 5)]).unwrap();
        let sp = dijkstra(&g.view(), 0, INF);
        assert_eq!(sp.dist, [0, 1, 2]);
        assert_eq!(sp.path_to(&g.view(), 2).unwrap(), [0, 1, 2]);
        assert_eq!(dijkstra(&g.view(), 0, 1).dist, [0, 1, INF]);
        assert_eq!(dijkstra(&g.view().reversed(), 2, INF).dist, [2, 1, 0]);
    }

    #[test]
    fn hop_limits() {
        let g = DecrementalGraph::new(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1)]).unwrap();
        assert_eq!(hop_bounded(&g.view(), 0, 0), [0, INF, INF, INF]);
        assert_eq!(hop_bounded(&g.view(), 0, 2), [0, 1, 2, INF]);
        assert_eq!(hop_bounded(&g.view(), 0, 3), dijkstra(&g.view(), 0, INF).dist);
    }
}
