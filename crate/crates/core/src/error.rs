use alloc::boxed::Box;

use crate::graph::Vertex;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("edge ({tail}, {head}) is listed twice")]
    DuplicateEdge { tail: Vertex, head: Vertex },
    #[error("weight {weight} of edge ({tail}, {head}) is outside [1, u64::MAX)")]
    WeightOutOfRange { tail: Vertex, head: Vertex, weight: u64 },
    #[error("vertex {vertex} is out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("edge ({tail}, {head}) does not exist")]
    MissingEdge { tail: Vertex, head: Vertex },
    #[error("weight of ({tail}, {head}) cannot change from {current} to {requested}")]
    NonMonotoneWeight { tail: Vertex, head: Vertex, current: u64, requested: u64 },
    #[error("partition failed: a separator radius reached its depth")]
    PartitionFailed,
    #[error("approximate topological order initialization failed")]
    AtoInitFailed,
    #[error("approximate topological order update failed")]
    AtoUpdateFailed,
    #[error("bundle copy {copy} failed: {source}")]
    BundleCopyFailed { copy: usize, source: Box<Error> },
    #[error("hierarchy level {level} failed: {source}")]
    HierarchyFailed { level: usize, source: Box<Error> },
    #[error("path step ({tail}, {head}) is not a live edge")]
    BrokenPath { tail: Vertex, head: Vertex },
    #[error("both arguments name the same node")]
    SameNode,
    #[error("vertex {0} is not reachable")]
    NoPath(Vertex),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
