//! Deterministic evolution of graph-indexed bounded state under
//! radius-limited, projection-bounded local updates, with instrumentation
//! showing that per-update work does not depend on total state size.
//!
//! A graph carries one unit-ball-confined vector per node. Each update reads
//! a radius-r neighborhood of at most D nodes, evaluates a Lipschitz local
//! functional, steps by eta and projects back into the ball, writing exactly
//! one node. A deterministic schedule composes these single-node updates
//! into a reproducible trajectory. The crate provides:
//!
//! - the graph/state container with the neighborhood cap enforced at every
//!   mutation ([`graph`]);
//! - the built-in functional family and unit-ball projection ([`functional`]);
//! - the single-node generator with read/write/flop instrumentation
//!   ([`generator`], [`metrics`]);
//! - deterministic schedules, the evolution loop and replay digests
//!   ([`schedule`], [`digest`], [`snapshot`]);
//! - norm identities and operator-bound certificates over the l2 embedding
//!   ([`hilbert`]);
//! - a deliberately naive reference evolver for differential testing
//!   ([`oracle`]).

pub mod digest;
pub mod error;
pub mod functional;
pub mod generator;
pub mod graph;
pub mod hilbert;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod schedule;
pub mod snapshot;

pub use digest::ReplayDigest;
pub use error::{Error, Result};
pub use functional::{estimate_lipschitz, project, LocalFunctional};
pub use generator::{
    apply_generator, apply_generator_traced, local_increment, Increment, StepCounters,
    UpdateParams,
};
pub use graph::{
    build_graph, EdgeOp, GraphSpec, GraphState, InitKind, NodeId, Topology, NORM_EPS,
};
pub use metrics::{scale_sweep, StepMetrics, SweepResult, TopologyFamily};
pub use schedule::{evolve, schedule_node, EvolveOptions, Schedule, Trajectory};
pub use snapshot::Snapshot;
