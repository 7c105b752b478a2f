//! The restricted single-source shortest-path interface consumed by the separator and
//! ATO machinery, and the factory abstraction that decides how instances are built.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::Result;
use crate::graph::{AppliedUpdate, DecrementalGraph, GraphView, Vertex, Weight};

/// The vertex-induced (and optionally edge-pruned) subgraph a structure runs on.
#[derive(Clone, Debug)]
pub struct Host {
    pub members: Vec<bool>,
    /// Edge ids hidden from the structure, frozen at build time.
    pub excluded: Option<Vec<bool>>,
}

impl Host {
    pub fn whole(n: usize) -> Self {
        Self { members: alloc::vec![true; n], excluded: None }
    }

    pub fn induced(members: Vec<bool>) -> Self {
        Self { members, excluded: None }
    }

    pub fn view<'a>(&'a self, graph: &'a DecrementalGraph) -> GraphView<'a> {
        let view = graph.induced(&self.members);
        match &self.excluded {
            Some(x) => view.without_edges(x),
            None => view,
        }
    }

    pub fn size(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }
}

/// Distances from and to a fixed root that never underestimate, and are within a
/// structure-specific factor of the truth whenever the truth is at most the depth.
pub trait RestrictedSssp: Send {
    fn root(&self) -> Vertex;

    fn depth(&self) -> Weight;

    /// Estimate of `dist(root, v)`.
    fn from_root(&self, v: Vertex) -> Weight;

    /// Estimate of `dist(v, root)`.
    fn to_root(&self, v: Vertex) -> Weight;

    /// Reacts to an update already applied to `graph`.
    fn handle_update(&mut self, graph: &DecrementalGraph, update: &AppliedUpdate);

    /// Shrinks the host by `removed`. Structures running on a superset host may ignore it.
    fn remove_vertices(&mut self, _graph: &DecrementalGraph, _removed: &[Vertex]) {}

    /// Changes whenever some estimate changed; lets callers cache derived maxima.
    fn generation(&self) -> u64;
}

/// Builds restricted SSSP structures for a fixed depth threshold.
pub trait SsspFactory: Send + Sync {
    fn depth(&self) -> Weight;

    fn build(&self, graph: &DecrementalGraph, host: Host, root: Vertex) -> Result<Box<dyn RestrictedSssp>>;
}
