//! Decremental approximate single-source shortest paths on weighted digraphs.
//!
//! The crate is `no_std` (it needs `alloc`). Graph IO, workload generation and the
//! command-line driver live in the companion `dsssp` crate.
#![no_std]

extern crate alloc;

pub mod ato;
pub mod error;
pub mod bootstrap;
pub mod dense;
pub mod es_tree;
pub mod graph;
pub mod paths;
pub mod rng;
pub mod scc_topo;
pub mod separator;
pub mod sparse;
pub mod sssp;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{AppliedUpdate, DecrementalGraph, EdgeId, GraphView, UpdateEvent, UpdateKind, Vertex, Weight, INF};
