//! Dynamic graph with node-indexed bounded state vectors.
//!
//! The graph carries, per node, a d-dimensional state vector confined to the
//! closed unit ball, and enforces the locality cap: every radius-r
//! neighborhood has at most `cap` nodes. The cap is checked at construction
//! and at every edge mutation, never lazily, so downstream per-update work
//! bounds hold unconditionally.

use std::fmt;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Slack tolerated on stored state norms.
pub const NORM_EPS: f64 = 1e-12;

/// Dense node index, unique within one graph.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeOp {
    Add(NodeId, NodeId),
    Remove(NodeId, NodeId),
}

#[derive(Clone, Debug)]
pub enum Topology {
    Ring { len: usize },
    Torus2d { rows: usize, cols: usize },
    RandomRegular { nodes: usize, degree: usize },
    Explicit { nodes: usize, edges: Vec<(u32, u32)> },
}

#[derive(Clone, Debug)]
pub struct GraphSpec {
    pub topology: Topology,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    Zeros,
    UniformBall,
    Surface,
}

/// Graph plus per-node state. Single-writer; clones are fully independent.
#[derive(Clone, Debug)]
pub struct GraphState {
    dim: usize,
    radius: usize,
    cap: usize,
    adjacency: Vec<Vec<NodeId>>, // each list sorted ascending
    states: Vec<f64>,            // node_count * dim, node-major
    balls: Vec<Vec<NodeId>>,     // cached N_r(i), sorted ascending, includes i
}

/// Truncated BFS: all nodes within `radius` hops of `start`, sorted ascending.
fn bfs_ball(adjacency: &[Vec<NodeId>], start: NodeId, radius: usize) -> Vec<NodeId> {
    let mut visited = vec![start];
    let mut frontier = vec![start];
    let mut seen = std::collections::HashSet::new();
    seen.insert(start);
    for _ in 0..radius {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in &adjacency[u.index()] {
                if seen.insert(v) {
                    visited.push(v);
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    visited.sort_unstable();
    visited
}

impl GraphState {
    fn with_edges(
        node_count: usize,
        edges: &[(u32, u32)],
        radius: usize,
        cap: usize,
        dim: usize,
    ) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in edges {
            if a as usize >= node_count || b as usize >= node_count {
                return Err(Error::UnknownNode(NodeId(a.max(b))));
            }
            if a == b {
                return Err(Error::SelfLoop(NodeId(a)));
            }
            let (u, v) = (NodeId(a), NodeId(b));
            if adjacency[u.index()].contains(&v) {
                return Err(Error::DuplicateEdge(u, v));
            }
            adjacency[u.index()].push(v);
            adjacency[v.index()].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let mut balls = Vec::with_capacity(node_count);
        for i in 0..node_count {
            let ball = bfs_ball(&adjacency, NodeId(i as u32), radius);
            if ball.len() > cap {
                return Err(Error::ConstructionViolatesCap {
                    node: NodeId(i as u32),
                    size: ball.len(),
                    cap,
                });
            }
            balls.push(ball);
        }
        Ok(Self {
            dim,
            radius,
            cap,
            adjacency,
            states: vec![0.0; node_count * dim],
            balls,
        })
    }

    /// Rebuild a graph from raw parts (snapshot loading). Validates the cap
    /// and every stored norm.
    pub fn from_parts(
        node_count: usize,
        edges: &[(u32, u32)],
        radius: usize,
        cap: usize,
        dim: usize,
        states: Vec<f64>,
    ) -> Result<Self> {
        if states.len() != node_count * dim {
            return Err(Error::DimensionMismatch {
                expected: node_count * dim,
                got: states.len(),
            });
        }
        let mut g = Self::with_edges(node_count, edges, radius, cap, dim)?;
        g.states = states;
        for i in g.nodes() {
            let norm = g.block_norm(i);
            if !(norm <= 1.0 + NORM_EPS) {
                return Err(Error::NormViolation { node: i, norm });
            }
        }
        Ok(g)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.radius
    }

    #[inline]
    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count() as u32).map(NodeId)
    }

    #[inline]
    fn check_node(&self, i: NodeId) -> Result<()> {
        if i.index() < self.node_count() {
            Ok(())
        } else {
            Err(Error::UnknownNode(i))
        }
    }

    #[inline]
    pub fn state(&self, i: NodeId) -> &[f64] {
        let base = i.index() * self.dim;
        &self.states[base..base + self.dim]
    }

    #[inline]
    pub(crate) fn state_mut(&mut self, i: NodeId) -> &mut [f64] {
        let base = i.index() * self.dim;
        &mut self.states[base..base + self.dim]
    }

    /// All node states, node-major, ascending NodeId.
    #[inline]
    pub fn states_flat(&self) -> &[f64] {
        &self.states
    }

    /// Euclidean norm of node i's state.
    pub fn block_norm(&self, i: NodeId) -> f64 {
        let mut acc = 0.0;
        for &c in self.state(i) {
            acc += c * c;
        }
        acc.sqrt()
    }

    pub fn max_block_norm(&self) -> f64 {
        self.nodes().map(|i| self.block_norm(i)).fold(0.0, f64::max)
    }

    /// Validated state ingestion: dimension, finiteness and the unit-ball
    /// invariant are enforced here.
    pub fn set_state(&mut self, i: NodeId, value: &[f64]) -> Result<()> {
        self.check_node(i)?;
        if value.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: value.len(),
            });
        }
        let mut acc = 0.0;
        for &c in value {
            if !c.is_finite() {
                return Err(Error::NonFiniteInput);
            }
            acc += c * c;
        }
        let norm = acc.sqrt();
        if !(norm <= 1.0 + NORM_EPS) {
            return Err(Error::NormViolation { node: i, norm });
        }
        self.state_mut(i).copy_from_slice(value);
        Ok(())
    }

    /// Cached radius-r neighborhood of `i`: ascending NodeId, includes `i`.
    pub fn neighborhood(&self, i: NodeId) -> Result<&[NodeId]> {
        self.check_node(i)?;
        Ok(&self.balls[i.index()])
    }

    /// Direct neighbors of `i`, sorted ascending.
    pub fn adjacent(&self, i: NodeId) -> Result<&[NodeId]> {
        self.check_node(i)?;
        Ok(&self.adjacency[i.index()])
    }

    pub fn degree(&self, i: NodeId) -> Result<usize> {
        self.check_node(i)?;
        Ok(self.adjacency[i.index()].len())
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u.index() < self.node_count() && self.adjacency[u.index()].contains(&v)
    }

    /// Edge list with u < v, sorted ascending.
    pub fn edge_list(&self) -> Vec<(NodeId, NodeId)> {
        let mut edges = Vec::new();
        for (u, list) in self.adjacency.iter().enumerate() {
            let u = NodeId(u as u32);
            for &v in list {
                if u < v {
                    edges.push((u, v));
                }
            }
        }
        edges
    }

    fn insert_edge_raw(&mut self, u: NodeId, v: NodeId) {
        let pos = self.adjacency[u.index()].partition_point(|&x| x < v);
        self.adjacency[u.index()].insert(pos, v);
        let pos = self.adjacency[v.index()].partition_point(|&x| x < u);
        self.adjacency[v.index()].insert(pos, u);
    }

    fn remove_edge_raw(&mut self, u: NodeId, v: NodeId) {
        self.adjacency[u.index()].retain(|&x| x != v);
        self.adjacency[v.index()].retain(|&x| x != u);
    }

    /// Add or remove one edge. Atomic: if an addition would push any
    /// radius-r neighborhood above the cap, the graph is left unchanged and
    /// `CapViolation` is returned. Cached neighborhoods of every node within
    /// distance r of either endpoint are recomputed.
    pub fn mutate_edge(&mut self, op: EdgeOp) -> Result<()> {
        match op {
            EdgeOp::Add(u, v) => {
                self.check_node(u)?;
                self.check_node(v)?;
                if u == v {
                    return Err(Error::SelfLoop(u));
                }
                if self.has_edge(u, v) {
                    return Err(Error::DuplicateEdge(u, v));
                }
                self.insert_edge_raw(u, v);
                // Only nodes within r of an endpoint (in the new graph) can
                // see a changed neighborhood.
                let mut affected = bfs_ball(&self.adjacency, u, self.radius);
                affected.extend(bfs_ball(&self.adjacency, v, self.radius));
                affected.sort_unstable();
                affected.dedup();
                let mut new_balls = Vec::with_capacity(affected.len());
                for &i in &affected {
                    let ball = bfs_ball(&self.adjacency, i, self.radius);
                    if ball.len() > self.cap {
                        self.remove_edge_raw(u, v); // roll back, caches untouched
                        return Err(Error::CapViolation {
                            node: i,
                            size: ball.len(),
                            cap: self.cap,
                        });
                    }
                    new_balls.push(ball);
                }
                for (&i, ball) in affected.iter().zip(new_balls) {
                    self.balls[i.index()] = ball;
                }
                Ok(())
            }
            EdgeOp::Remove(u, v) => {
                self.check_node(u)?;
                self.check_node(v)?;
                if !self.has_edge(u, v) {
                    return Err(Error::MissingEdge(u, v));
                }
                // Affected set computed in the old graph: removal shrinks it.
                let mut affected = bfs_ball(&self.adjacency, u, self.radius);
                affected.extend(bfs_ball(&self.adjacency, v, self.radius));
                affected.sort_unstable();
                affected.dedup();
                self.remove_edge_raw(u, v);
                for &i in &affected {
                    self.balls[i.index()] = bfs_ball(&self.adjacency, i, self.radius);
                }
                Ok(())
            }
        }
    }

    /// Initialize all node states. Deterministic: (kind, seed, dim, node set)
    /// fully determine the result, nodes drawn in ascending NodeId order.
    pub fn init_state(&mut self, kind: InitKind, seed: u64) {
        match kind {
            InitKind::Zeros => self.states.fill(0.0),
            InitKind::UniformBall => {
                let mut rng = SplitMix64::new(seed);
                let dim = self.dim;
                let mut dir = vec![0.0; dim];
                for i in 0..self.node_count() {
                    loop {
                        rng.fill_normal(&mut dir);
                        let norm = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
                        if norm > 0.0 {
                            let radius = rng.next_f64().powf(1.0 / dim as f64);
                            let scale = radius / norm;
                            let base = i * dim;
                            for (j, &c) in dir.iter().enumerate() {
                                self.states[base + j] = c * scale;
                            }
                            break;
                        }
                    }
                }
            }
            InitKind::Surface => {
                let mut rng = SplitMix64::new(seed);
                let dim = self.dim;
                let mut dir = vec![0.0; dim];
                for i in 0..self.node_count() {
                    loop {
                        rng.fill_normal(&mut dir);
                        let norm = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
                        if norm > 0.0 {
                            let base = i * dim;
                            for (j, &c) in dir.iter().enumerate() {
                                self.states[base + j] = c / norm;
                            }
                            break;
                        }
                    }
                }
            }
        }
    }

    /// Zero every state in place (used for measuring update constants at the
    /// zero configuration).
    pub fn zero_states(&mut self) {
        self.states.fill(0.0);
    }

    /// Exhaustive invariant check by independent BFS; used by tests and the
    /// verify path, not by the evolution hot loop.
    pub fn check_cap_by_bfs(&self) -> Result<()> {
        for i in self.nodes() {
            let ball = bfs_ball(&self.adjacency, i, self.radius);
            if ball.len() > self.cap {
                return Err(Error::ConstructionViolatesCap {
                    node: i,
                    size: ball.len(),
                    cap: self.cap,
                });
            }
            if ball != self.balls[i.index()] {
                return Err(Error::InvalidSpec(format!(
                    "cached neighborhood of node {i} is stale"
                )));
            }
        }
        Ok(())
    }
}

fn ring_edges(len: usize) -> Result<Vec<(u32, u32)>> {
    if len < 3 {
        return Err(Error::InvalidSpec(format!("ring needs at least 3 nodes, got {len}")));
    }
    Ok((0..len as u32).map(|i| (i, (i + 1) % len as u32)).collect())
}

fn torus_edges(rows: usize, cols: usize) -> Result<Vec<(u32, u32)>> {
    if rows < 3 || cols < 3 {
        return Err(Error::InvalidSpec(format!(
            "torus needs rows, cols >= 3, got {rows}x{cols}"
        )));
    }
    let idx = |r: usize, c: usize| (r * cols + c) as u32;
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            edges.push((idx(r, c), idx(r, (c + 1) % cols)));
            edges.push((idx(r, c), idx((r + 1) % rows, c)));
        }
    }
    Ok(edges)
}

/// Random regular graph by the pairing model: shuffle degree-many stubs per
/// node, pair consecutively, retry on self-loops or duplicates.
fn random_regular_edges(nodes: usize, degree: usize, seed: u64) -> Result<Vec<(u32, u32)>> {
    if nodes == 0 || degree == 0 || degree >= nodes || (nodes * degree) % 2 != 0 {
        return Err(Error::InvalidSpec(format!(
            "random regular graph needs 0 < degree < nodes and nodes*degree even, got nodes={nodes} degree={degree}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    'attempt: for _ in 0..1000 {
        let mut stubs: Vec<u32> = Vec::with_capacity(nodes * degree);
        for i in 0..nodes as u32 {
            for _ in 0..degree {
                stubs.push(i);
            }
        }
        rng.shuffle(&mut stubs);
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::with_capacity(nodes * degree / 2);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b {
                continue 'attempt;
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                continue 'attempt;
            }
            edges.push(key);
        }
        return Ok(edges);
    }
    Err(Error::InvalidSpec(format!(
        "failed to realize a random {degree}-regular graph on {nodes} nodes"
    )))
}

/// Build a graph from a spec with all states zero-initialized. Fails with
/// `ConstructionViolatesCap` if any radius-r neighborhood exceeds the cap.
pub fn build_graph(spec: &GraphSpec, radius: usize, cap: usize, dim: usize) -> Result<GraphState> {
    if radius < 1 {
        return Err(Error::InvalidParameter("radius must be >= 1".into()));
    }
    if cap < 1 {
        return Err(Error::InvalidParameter("cap must be >= 1".into()));
    }
    if dim < 1 {
        return Err(Error::InvalidParameter("dim must be >= 1".into()));
    }
    let (node_count, edges) = match &spec.topology {
        Topology::Ring { len } => (*len, ring_edges(*len)?),
        Topology::Torus2d { rows, cols } => (rows * cols, torus_edges(*rows, *cols)?),
        Topology::RandomRegular { nodes, degree } => {
            (*nodes, random_regular_edges(*nodes, *degree, spec.seed)?)
        }
        Topology::Explicit { nodes, edges } => (*nodes, edges.clone()),
    };
    GraphState::with_edges(node_count, &edges, radius, cap, dim)
}
