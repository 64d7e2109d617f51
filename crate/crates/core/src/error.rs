use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("graph construction violates cap: |N_r({node})| = {size} > D = {cap}")]
    ConstructionViolatesCap { node: NodeId, size: usize, cap: usize },

    #[error("edge mutation rejected: |N_r({node})| would be {size} > D = {cap}")]
    CapViolation { node: NodeId, size: usize, cap: usize },

    #[error("edge ({0}, {1}) already present")]
    DuplicateEdge(NodeId, NodeId),

    #[error("edge ({0}, {1}) not present")]
    MissingEdge(NodeId, NodeId),

    #[error("self-loop at node {0} not allowed")]
    SelfLoop(NodeId),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered")]
    NonFiniteInput,

    #[error("schedule requires a non-empty graph")]
    EmptyGraph,

    #[error("state norm {norm} at node {node} exceeds the unit ball")]
    NormViolation { node: NodeId, norm: f64 },

    #[error("monitor violation at step {step}, node {node}: {detail}")]
    MonitorViolation { step: u64, node: NodeId, detail: String },

    #[error("invalid graph spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
