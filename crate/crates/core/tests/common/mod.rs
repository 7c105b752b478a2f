#![allow(dead_code)]

use dsssp_core::rng::{below, chance, named_stream, Rng};
use dsssp_core::{DecrementalGraph, UpdateEvent, Vertex, Weight};

pub fn rng(name: &str, index: u64) -> Rng {
    named_stream(0x5eed, name, index)
}

/// Directed G(n, p) with weights uniform in `[1, max_w]`.
pub fn random_graph(rng: &mut Rng, n: usize, p: f64, max_w: Weight) -> DecrementalGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && chance(rng, p) {
                edges.push((u, v, 1 + below(rng, max_w as usize) as Weight));
            }
        }
    }
    DecrementalGraph::new(n, &edges).unwrap()
}

/// Random DAG: edges only go forward in a random permutation.
pub fn random_dag(rng: &mut Rng, n: usize, p: f64, max_w: Weight) -> DecrementalGraph {
    let mut order: Vec<Vertex> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, below(rng, i + 1));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if chance(rng, p) {
                edges.push((order[i], order[j], 1 + below(rng, max_w as usize) as Weight));
            }
        }
    }
    DecrementalGraph::new(n, &edges).unwrap()
}

/// `side × side` grid with edges in both directions.
pub fn bidirected_grid(rng: &mut Rng, side: usize, max_w: Weight) -> DecrementalGraph {
    let id = |r: usize, c: usize| r * side + c;
    let mut edges = Vec::new();
    for r in 0..side {
        for c in 0..side {
            for (r2, c2) in [(r + 1, c), (r, c + 1)] {
                if r2 < side && c2 < side {
                    edges.push((id(r, c), id(r2, c2), 1 + below(rng, max_w as usize) as Weight));
                    edges.push((id(r2, c2), id(r, c), 1 + below(rng, max_w as usize) as Weight));
                }
            }
        }
    }
    DecrementalGraph::new(side * side, &edges).unwrap()
}

/// Deletes every edge in random order; with `increase_every = Some(k)`, every k-th step
/// is instead a weight increase on a random live edge.
pub fn full_trace(rng: &mut Rng, g: &DecrementalGraph, increase_every: Option<usize>) -> Vec<UpdateEvent> {
    let mut live: Vec<(Vertex, Vertex, Weight)> = g.live_edges().map(|(_, e)| (e.tail, e.head, e.weight)).collect();
    for i in (1..live.len()).rev() {
        live.swap(i, below(rng, i + 1));
    }
    let mut out = Vec::new();
    let mut step = 0;
    while let Some(&(u, v, w)) = live.last() {
        step += 1;
        if increase_every.is_some_and(|k| step % k == 0) {
            let i = below(rng, live.len());
            let (a, b, old) = live[i];
            let nw = old + 1 + below(rng, 4) as Weight;
            live[i].2 = nw;
            out.push(UpdateEvent::increase(a, b, nw));
            continue;
        }
        let _ = w;
        live.pop();
        out.push(UpdateEvent::delete(u, v));
    }
    out
}
