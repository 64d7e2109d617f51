//! Single-node update: read the radius-r neighborhood, evaluate the local
//! functional, step by eta, project back into the unit ball, write one node.

use crate::error::{Error, Result};
use crate::functional::{project, LocalFunctional};
use crate::graph::{GraphState, NodeId};

#[derive(Clone, Debug)]
pub struct UpdateParams {
    pub eta: f64,
    pub functional: LocalFunctional,
}

impl UpdateParams {
    pub fn new(eta: f64, functional: LocalFunctional) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eta must be positive and finite, got {eta}"
            )));
        }
        functional.validate()?;
        Ok(Self { eta, functional })
    }
}

/// Raw per-update counters. `state_reads` counts state vectors read (the
/// whole neighborhood, center included), `flop_proxy` counts scalar
/// multiply/add operations inside evaluation, stepping and projection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepCounters {
    pub state_reads: u64,
    pub state_writes: u64,
    pub flop_proxy: u64,
}

/// The per-update change T_i - s_i; norm always <= 2.
#[derive(Clone, Debug)]
pub struct Increment {
    pub delta: Vec<f64>,
}

impl Increment {
    pub fn norm(&self) -> f64 {
        self.delta.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Reusable buffers for the hot loop.
pub struct Scratch {
    eval: Vec<f64>,
    target: Vec<f64>,
}

impl Scratch {
    pub fn new(dim: usize) -> Self {
        Self { eval: vec![0.0; dim], target: vec![0.0; dim] }
    }
}

/// Compute the update target Pi(s_i + eta f(...)) into `scratch.target`.
/// When `read_log` is given, every state-vector access is recorded.
fn compute_target(
    g: &GraphState,
    i: NodeId,
    p: &UpdateParams,
    scratch: &mut Scratch,
    mut read_log: Option<&mut Vec<NodeId>>,
) -> Result<StepCounters> {
    let ball = g.neighborhood(i)?;
    let mut counters = StepCounters { state_reads: 0, state_writes: 0, flop_proxy: 0 };

    let mut neighbors: Vec<&[f64]> = Vec::with_capacity(ball.len());
    for &j in ball {
        if j == i {
            continue;
        }
        neighbors.push(g.state(j));
        counters.state_reads += 1;
        if let Some(log) = read_log.as_deref_mut() {
            log.push(j);
        }
    }
    let center = g.state(i);
    counters.state_reads += 1;
    if let Some(log) = read_log.as_deref_mut() {
        log.push(i);
    }

    p.functional.eval(center, &neighbors, &mut scratch.eval, &mut counters.flop_proxy)?;
    for &v in scratch.eval.iter() {
        if !v.is_finite() {
            // Silent NaN propagation would falsify the boundedness claims.
            return Err(Error::NonFiniteInput);
        }
    }
    for j in 0..scratch.target.len() {
        scratch.target[j] = center[j] + p.eta * scratch.eval[j];
    }
    counters.flop_proxy += 2 * scratch.target.len() as u64;
    project(&mut scratch.target, &mut counters.flop_proxy)?;
    Ok(counters)
}

/// The increment T_i - s_i without mutating the graph.
pub fn local_increment(
    g: &GraphState,
    i: NodeId,
    p: &UpdateParams,
) -> Result<(Increment, StepCounters)> {
    let mut scratch = Scratch::new(g.dim());
    let counters = compute_target(g, i, p, &mut scratch, None)?;
    let delta: Vec<f64> =
        scratch.target.iter().zip(g.state(i)).map(|(t, s)| t - s).collect();
    Ok((Increment { delta }, counters))
}

/// Apply the generator in place using caller-owned scratch. Returns the
/// counters and the Euclidean norm of the written state.
pub fn apply_in_place(
    g: &mut GraphState,
    i: NodeId,
    p: &UpdateParams,
    scratch: &mut Scratch,
) -> Result<(StepCounters, f64)> {
    let mut counters = compute_target(g, i, p, scratch, None)?;
    g.state_mut(i).copy_from_slice(&scratch.target);
    counters.state_writes = 1;
    let norm = scratch.target.iter().map(|c| c * c).sum::<f64>().sqrt();
    Ok((counters, norm))
}

/// Apply the generator to node `i`: state of `i` becomes
/// Pi(s_i + eta f(neighborhood)), every other node untouched.
pub fn apply_generator(g: &mut GraphState, i: NodeId, p: &UpdateParams) -> Result<StepCounters> {
    let mut scratch = Scratch::new(g.dim());
    let (counters, _) = apply_in_place(g, i, p, &mut scratch)?;
    Ok(counters)
}

/// As `apply_generator`, additionally returning the exact list of nodes whose
/// state was read, in access order.
pub fn apply_generator_traced(
    g: &mut GraphState,
    i: NodeId,
    p: &UpdateParams,
) -> Result<(StepCounters, Vec<NodeId>)> {
    let mut scratch = Scratch::new(g.dim());
    let mut reads = Vec::new();
    let mut counters = compute_target(g, i, p, &mut scratch, Some(&mut reads))?;
    g.state_mut(i).copy_from_slice(&scratch.target);
    counters.state_writes = 1;
    Ok((counters, reads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, EdgeOp, GraphSpec, InitKind, Topology, NORM_EPS};

    fn ring(len: usize, dim: usize) -> GraphState {
        build_graph(
            &GraphSpec { topology: Topology::Ring { len }, seed: 0 },
            1,
            3,
            dim,
        )
        .unwrap()
    }

    #[test]
    fn zero_functional_is_identity_for_interior_states() {
        let mut g = ring(10, 2);
        g.init_state(InitKind::UniformBall, 3);
        let before = g.states_flat().to_vec();
        let p = UpdateParams::new(1.0, LocalFunctional::Zero).unwrap();
        let (inc, _) = local_increment(&g, NodeId(4), &p).unwrap();
        assert_eq!(inc.norm(), 0.0);
        apply_generator(&mut g, NodeId(4), &p).unwrap();
        assert_eq!(g.states_flat(), &before[..]);
    }

    #[test]
    fn tiny_eta_gives_negligible_increment() {
        let mut g = ring(10, 2);
        g.init_state(InitKind::UniformBall, 9);
        let p = UpdateParams::new(
            1e-300,
            LocalFunctional::NeighborAverage { scale: 1.0 },
        )
        .unwrap();
        let (inc, _) = local_increment(&g, NodeId(0), &p).unwrap();
        assert!(inc.norm() <= 1e-299);
    }

    #[test]
    fn increment_bound_is_tight() {
        // Two-node path, s0 = (1,0), s1 = (-1,0). With scale 2 and eta 1 the
        // mean is exactly 0, f = 2(0 - 1, 0) = (-2, 0), and the target
        // Pi((-1, 0)) = (-1, 0) needs no rescale: delta = (-2, 0) exactly.
        let mut g = build_graph(
            &GraphSpec {
                topology: Topology::Explicit { nodes: 2, edges: vec![(0, 1)] },
                seed: 0,
            },
            1,
            2,
            2,
        )
        .unwrap();
        g.set_state(NodeId(0), &[1.0, 0.0]).unwrap();
        g.set_state(NodeId(1), &[-1.0, 0.0]).unwrap();
        let p = UpdateParams::new(1.0, LocalFunctional::NeighborAverage { scale: 2.0 }).unwrap();
        let (inc, _) = local_increment(&g, NodeId(0), &p).unwrap();
        assert_eq!(inc.delta, vec![-2.0, 0.0]);
        assert_eq!(inc.norm(), 2.0);
    }

    #[test]
    fn hand_example_ring4_neighbor_average() {
        // Ring M=4, d=2, all (1,0) except s0=(0,0). Neighbors of 0 are 1 and
        // 3; mean((1,0),(1,0),(0,0)) = (2/3,0); s0 + 0.5*(2/3,0) = (1/3,0).
        let mut g = ring(4, 2);
        for i in 1..4 {
            g.set_state(NodeId(i), &[1.0, 0.0]).unwrap();
        }
        let p = UpdateParams::new(0.5, LocalFunctional::NeighborAverage { scale: 1.0 }).unwrap();
        let before: Vec<f64> = g.states_flat()[2..].to_vec();
        apply_generator(&mut g, NodeId(0), &p).unwrap();
        assert_eq!(g.state(NodeId(0)), &[1.0 / 3.0, 0.0]);
        assert_eq!(&g.states_flat()[2..], &before[..]);
    }

    #[test]
    fn other_nodes_bit_identical_after_apply() {
        let mut g = ring(10, 3);
        g.init_state(InitKind::Surface, 21);
        let before = g.states_flat().to_vec();
        let p = UpdateParams::new(0.3, LocalFunctional::SaturatedMix { gain: 1.0, bias: 0.1 })
            .unwrap();
        apply_generator(&mut g, NodeId(0), &p).unwrap();
        let dim = g.dim();
        for i in 1..10 {
            assert_eq!(
                &g.states_flat()[i * dim..(i + 1) * dim],
                &before[i * dim..(i + 1) * dim]
            );
        }
        assert!(g.block_norm(NodeId(0)) <= 1.0 + NORM_EPS);
    }

    #[test]
    fn traced_reads_are_exactly_the_neighborhood() {
        let mut g = ring(10, 2);
        g.init_state(InitKind::UniformBall, 1);
        let p = UpdateParams::new(0.5, LocalFunctional::NeighborAverage { scale: 1.0 }).unwrap();
        let ball: Vec<NodeId> = g.neighborhood(NodeId(5)).unwrap().to_vec();
        let (counters, mut reads) = apply_generator_traced(&mut g, NodeId(5), &p).unwrap();
        reads.sort_unstable();
        reads.dedup();
        assert_eq!(reads, ball);
        assert_eq!(counters.state_reads, 3);
        assert_eq!(counters.state_writes, 1);
    }

    #[test]
    fn counters_pure_in_time_and_stable_under_mutation_rollback() {
        let mut g = ring(10, 2);
        g.init_state(InitKind::UniformBall, 2);
        let p = UpdateParams::new(0.2, LocalFunctional::CurvedRotation { angle: 0.3, amplitude: 1.0 })
            .unwrap();
        let a = apply_generator(&mut g, NodeId(3), &p).unwrap();
        let _ = g.mutate_edge(EdgeOp::Add(NodeId(0), NodeId(5))).unwrap_err();
        let b = apply_generator(&mut g, NodeId(3), &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_node_is_rejected() {
        let g = ring(4, 2);
        let p = UpdateParams::new(0.5, LocalFunctional::Zero).unwrap();
        assert!(matches!(local_increment(&g, NodeId(99), &p), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn invalid_eta_rejected() {
        assert!(UpdateParams::new(0.0, LocalFunctional::Zero).is_err());
        assert!(UpdateParams::new(f64::NAN, LocalFunctional::Zero).is_err());
        assert!(UpdateParams::new(-1.0, LocalFunctional::Zero).is_err());
    }
}
