//! Binary state snapshot.
//!
//! Layout, all integers and floats little-endian:
//!   magic "BLGC1" (5 bytes)
//!   M, d, r, D as u64
//!   M*d node states as f64, ascending NodeId, node-major
//!   edge list as (u64, u64) pairs with u < v, ascending, running to EOF
//!
//! Round-trips are bit-exact; the canonical byte string doubles as the
//! replay-digest input.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::graph::GraphState;

pub const MAGIC: &[u8; 5] = b"BLGC1";

/// Raw snapshot contents. Deliberately unvalidated so that corrupted files
/// can be loaded for inspection; `into_graph` enforces the invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub node_count: usize,
    pub dim: usize,
    pub radius: usize,
    pub cap: usize,
    pub states: Vec<f64>,
    pub edges: Vec<(u32, u32)>,
}

impl Snapshot {
    pub fn from_graph(g: &GraphState) -> Self {
        Self {
            node_count: g.node_count(),
            dim: g.dim(),
            radius: g.radius(),
            cap: g.cap(),
            states: g.states_flat().to_vec(),
            edges: g.edge_list().iter().map(|&(u, v)| (u.0, v.0)).collect(),
        }
    }

    /// Validated conversion: cap and unit-ball invariants are enforced.
    pub fn into_graph(self) -> Result<GraphState> {
        GraphState::from_parts(
            self.node_count,
            &self.edges,
            self.radius,
            self.cap,
            self.dim,
            self.states,
        )
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [self.node_count, self.dim, self.radius, self.cap] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        for &x in &self.states {
            w.write_all(&x.to_le_bytes())?;
        }
        for &(u, v) in &self.edges {
            w.write_all(&(u as u64).to_le_bytes())?;
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::SnapshotFormat("bad magic".into()));
        }
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut u64buf)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let node_count = read_u64(r)? as usize;
        let dim = read_u64(r)? as usize;
        let radius = read_u64(r)? as usize;
        let cap = read_u64(r)? as usize;
        let floats = node_count
            .checked_mul(dim)
            .ok_or_else(|| Error::SnapshotFormat("size overflow".into()))?;
        let mut states = Vec::with_capacity(floats);
        let mut f64buf = [0u8; 8];
        for _ in 0..floats {
            r.read_exact(&mut f64buf)?;
            states.push(f64::from_le_bytes(f64buf));
        }
        let mut edges = Vec::new();
        loop {
            let mut pair = [0u8; 16];
            match r.read_exact(&mut pair) {
                Ok(()) => {
                    let u = u64::from_le_bytes(pair[..8].try_into().unwrap());
                    let v = u64::from_le_bytes(pair[8..].try_into().unwrap());
                    if u > u32::MAX as u64 || v > u32::MAX as u64 {
                        return Err(Error::SnapshotFormat("edge endpoint overflow".into()));
                    }
                    edges.push((u as u32, v as u32));
                }
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Self { node_count, dim, radius, cap, states, edges })
    }
}

/// Canonical snapshot byte string of a graph state.
pub fn to_bytes(g: &GraphState) -> Vec<u8> {
    let mut buf = Vec::new();
    Snapshot::from_graph(g).write_to(&mut buf).expect("write to Vec cannot fail");
    buf
}
