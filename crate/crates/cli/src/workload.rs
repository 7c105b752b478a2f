//! Deterministic graph and trace generators.

use dsssp_core::rng::{below, chance, named_stream, Rng};
use dsssp_core::{UpdateEvent, Vertex, Weight};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum GraphSpec {
    /// Directed `G(n, p)`.
    Random { n: usize, density: f64, max_weight: Weight },
    /// `side × side` grid with both directions of every grid edge.
    Grid { side: usize, max_weight: Weight },
    /// `layers` layers of `width` vertices; edges only go to later layers.
    DagLayered { layers: usize, width: usize, density: f64, max_weight: Weight },
}

pub type EdgeList = Vec<(Vertex, Vertex, Weight)>;

fn weight(rng: &mut Rng, max_weight: Weight) -> Weight {
    1 + below(rng, max_weight as usize) as Weight
}

impl GraphSpec {
    fn validate(&self) -> CliResult<()> {
        let (density, max_weight) = match *self {
            Self::Random { density, max_weight, .. } | Self::DagLayered { density, max_weight, .. } => (density, max_weight),
            Self::Grid { max_weight, .. } => (1.0, max_weight),
        };
        if !(0.0..=1.0).contains(&density) {
            return Err(CliError::Spec(format!("density {density} is not a probability")));
        }
        if max_weight == 0 {
            return Err(CliError::Spec("maximum weight must be at least 1".into()));
        }
        Ok(())
    }

    /// Returns `(n, edges)`; the same spec and seed always give the same list.
    pub fn generate(&self, seed: u64) -> CliResult<(usize, EdgeList)> {
        self.validate()?;
        let mut rng = named_stream(seed, "graph", 0);
        let mut edges = Vec::new();
        let n = match *self {
            Self::Random { n, density, max_weight } => {
                for u in 0..n {
                    for v in 0..n {
                        if u != v && chance(&mut rng, density) {
                            edges.push((u, v, weight(&mut rng, max_weight)));
                        }
                    }
                }
                n
            }
            Self::Grid { side, max_weight } => {
                let id = |r: usize, c: usize| r * side + c;
                for r in 0..side {
                    for c in 0..side {
                        for (r2, c2) in [(r + 1, c), (r, c + 1)] {
                            if r2 < side && c2 < side {
                                edges.push((id(r, c), id(r2, c2), weight(&mut rng, max_weight)));
                                edges.push((id(r2, c2), id(r, c), weight(&mut rng, max_weight)));
                            }
                        }
                    }
                }
                side * side
            }
            Self::DagLayered { layers, width, density, max_weight } => {
                for a in 0..layers {
                    for b in a + 1..layers {
                        for i in 0..width {
                            for j in 0..width {
                                if chance(&mut rng, density) {
                                    edges.push((a * width + i, b * width + j, weight(&mut rng, max_weight)));
                                }
                            }
                        }
                    }
                }
                layers * width
            }
        };
        Ok((n, edges))
    }
}

/// Deletes every edge in a random order. With `increase_every = Some(k)`, every `k`-th
/// update instead raises a random live edge by 1 to 4.
pub fn full_trace(edges: &[(Vertex, Vertex, Weight)], increase_every: Option<usize>, seed: u64) -> Vec<UpdateEvent> {
    let mut rng = named_stream(seed, "trace", 0);
    let mut live: EdgeList = edges.to_vec();
    for i in (1..live.len()).rev() {
        live.swap(i, below(&mut rng, i + 1));
    }
    let mut out = Vec::new();
    let mut step = 0;
    while let Some(&(u, v, _)) = live.last() {
        step += 1;
        if increase_every.is_some_and(|k| k > 0 && step % k == 0) {
            let i = below(&mut rng, live.len());
            live[i].2 += 1 + below(&mut rng, 4) as Weight;
            out.push(UpdateEvent::increase(live[i].0, live[i].1, live[i].2));
            continue;
        }
        live.pop();
        out.push(UpdateEvent::delete(u, v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use dsssp_core::scc_topo::strongly_connected;
    use dsssp_core::DecrementalGraph;

    #[test]
    fn grid_counts() {
        let (n, edges) = GraphSpec::Grid { side: 4, max_weight: 3 }.generate(1).unwrap();
        assert_eq!((n, edges.len()), (16, 48));
    }

    #[test]
    fn layered_is_acyclic() {
        let spec = GraphSpec::DagLayered { layers: 3, width: 2, density: 1.0, max_weight: 5 };
        let (n, edges) = spec.generate(7).unwrap();
        let g = DecrementalGraph::new(n, &edges).unwrap();
        assert!(strongly_connected(&g.view()).iter().all(|c| c.len() == 1));
        assert_eq!(edges.len(), 12);
    }

    #[test]
    fn deterministic_and_replayable() {
        let spec = GraphSpec::Random { n: 20, density: 0.2, max_weight: 9 };
        let (n, edges) = spec.generate(3).unwrap();
        assert_eq!(spec.generate(3).unwrap(), (n, edges.clone()));
        let trace = full_trace(&edges, Some(3), 3);
        assert_eq!(trace, full_trace(&edges, Some(3), 3));
        let mut g = DecrementalGraph::new(n, &edges).unwrap();
        for ev in trace {
            g.apply_update(ev).unwrap();
        }
        assert_eq!(g.live_edge_count(), 0);
    }

    #[test]
    fn bad_specs() {
        assert!(GraphSpec::Random { n: 3, density: 1.5, max_weight: 1 }.generate(0).is_err());
        assert!(GraphSpec::Grid { side: 2, max_weight: 0 }.generate(0).is_err());
    }
}
