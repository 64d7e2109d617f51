//! Brute-force reference evolver, used only by tests.
//!
//! Everything here is recomputed from scratch each step: neighborhoods by a
//! fresh BFS, functional evaluation and projection in straight-line code, no
//! caching and no instrumentation. Floating-point operations follow the same
//! canonical order as the engine (neighbor states summed in ascending NodeId
//! order, center added last, division by the count; projection divides by
//! the norm), so results are bit-comparable.

use crate::error::{Error, Result};
use crate::functional::LocalFunctional;
use crate::generator::UpdateParams;
use crate::graph::GraphState;
use crate::rng::{mix64, SplitMix64};
use crate::schedule::Schedule;

#[derive(Clone, Debug)]
pub struct OracleState {
    pub dim: usize,
    pub radius: usize,
    pub states: Vec<Vec<f64>>,
    pub edges: Vec<(u32, u32)>,
}

impl OracleState {
    pub fn from_graph(g: &GraphState) -> Self {
        Self {
            dim: g.dim(),
            radius: g.radius(),
            states: g.nodes().map(|i| g.state(i).to_vec()).collect(),
            edges: g.edge_list().iter().map(|&(u, v)| (u.0, v.0)).collect(),
        }
    }

    /// Nodes within `radius` hops of `start`, sorted, including `start`.
    pub fn ball(&self, start: usize) -> Vec<usize> {
        let mut reached = vec![start];
        let mut frontier = vec![start];
        for _ in 0..self.radius {
            let mut next = Vec::new();
            for &u in &frontier {
                for &(a, b) in &self.edges {
                    let (a, b) = (a as usize, b as usize);
                    if a == u && !reached.contains(&b) {
                        reached.push(b);
                        next.push(b);
                    }
                    if b == u && !reached.contains(&a) {
                        reached.push(a);
                        next.push(a);
                    }
                }
            }
            frontier = next;
        }
        reached.sort_unstable();
        reached
    }

    fn node_at(&self, sched: &Schedule, t: u64) -> Result<usize> {
        let m = self.states.len() as u64;
        if m == 0 {
            return Err(Error::EmptyGraph);
        }
        match sched {
            Schedule::RoundRobin => Ok((t % m) as usize),
            Schedule::ExplicitCycle(list) => {
                if list.is_empty() {
                    return Err(Error::EmptyGraph);
                }
                Ok(list[(t % list.len() as u64) as usize].index())
            }
            Schedule::SeededSweep { seed } => {
                let mut perm: Vec<usize> = (0..m as usize).collect();
                let mut rng = SplitMix64::new(*seed ^ mix64(t / m));
                rng.shuffle(&mut perm);
                Ok(perm[(t % m) as usize])
            }
            Schedule::FrontierBfs { start } => {
                let mut order = Vec::new();
                let mut seen = vec![false; m as usize];
                let mut queue = std::collections::VecDeque::new();
                seen[start.index()] = true;
                queue.push_back(start.index());
                while let Some(u) = queue.pop_front() {
                    order.push(u);
                    let mut adjacent: Vec<usize> = self
                        .edges
                        .iter()
                        .filter_map(|&(a, b)| {
                            if a as usize == u {
                                Some(b as usize)
                            } else if b as usize == u {
                                Some(a as usize)
                            } else {
                                None
                            }
                        })
                        .collect();
                    adjacent.sort_unstable();
                    for v in adjacent {
                        if !seen[v] {
                            seen[v] = true;
                            queue.push_back(v);
                        }
                    }
                }
                for v in 0..m as usize {
                    if !seen[v] {
                        order.push(v);
                    }
                }
                Ok(order[(t % m) as usize])
            }
        }
    }
}

fn eval_naive(f: &LocalFunctional, center: &[f64], neighbors: &[&Vec<f64>]) -> Vec<f64> {
    let dim = center.len();
    let mean = |center: &[f64], neighbors: &[&Vec<f64>]| -> Vec<f64> {
        let mut sum = vec![0.0; dim];
        for n in neighbors {
            for j in 0..dim {
                sum[j] += n[j];
            }
        }
        for j in 0..dim {
            sum[j] += center[j];
        }
        let count = (neighbors.len() + 1) as f64;
        for v in sum.iter_mut() {
            *v /= count;
        }
        sum
    };
    match f {
        LocalFunctional::Zero => vec![0.0; dim],
        LocalFunctional::NeighborAverage { scale } => {
            let m = mean(center, neighbors);
            (0..dim).map(|j| (m[j] - center[j]) * scale).collect()
        }
        LocalFunctional::SaturatedMix { gain, bias } => {
            let m = mean(center, neighbors);
            m.iter().map(|&v| (gain * v + bias).tanh()).collect()
        }
        LocalFunctional::CurvedRotation { angle, amplitude } => {
            let m = mean(center, neighbors);
            let mut norm_sq = 0.0;
            for &v in &m {
                norm_sq += v * v;
            }
            if norm_sq == 0.0 {
                return vec![0.0; dim];
            }
            let norm = norm_sq.sqrt();
            let scale = amplitude * norm.tanh() / norm;
            let mut out: Vec<f64> = m.iter().map(|&v| v * scale).collect();
            if dim >= 2 {
                let (sin, cos) = angle.sin_cos();
                let (a, b) = (out[0], out[1]);
                out[0] = cos * a - sin * b;
                out[1] = sin * a + cos * b;
            }
            out
        }
    }
}

fn project_naive(mut x: Vec<f64>) -> Vec<f64> {
    let mut norm_sq = 0.0;
    for &c in &x {
        norm_sq += c * c;
    }
    if norm_sq > 1.0 {
        let norm = norm_sq.sqrt();
        for c in x.iter_mut() {
            *c /= norm;
        }
    }
    x
}

/// The same recurrence as the engine, maximally simple.
pub fn oracle_evolve(
    mut s: OracleState,
    sched: &Schedule,
    p: &UpdateParams,
    steps: u64,
) -> Result<OracleState> {
    for t in 0..steps {
        let i = s.node_at(sched, t)?;
        let ball = s.ball(i);
        let neighbors: Vec<&Vec<f64>> =
            ball.iter().filter(|&&j| j != i).map(|&j| &s.states[j]).collect();
        let f = eval_naive(&p.functional, &s.states[i], &neighbors);
        let target: Vec<f64> =
            (0..s.dim).map(|j| s.states[i][j] + p.eta * f[j]).collect();
        s.states[i] = project_naive(target);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, GraphSpec, NodeId, Topology};

    #[test]
    fn zero_steps_unchanged() {
        let g = build_graph(
            &GraphSpec { topology: Topology::Ring { len: 5 }, seed: 0 },
            1,
            3,
            2,
        )
        .unwrap();
        let s = OracleState::from_graph(&g);
        let p = UpdateParams::new(0.5, LocalFunctional::Zero).unwrap();
        let out = oracle_evolve(s.clone(), &Schedule::RoundRobin, &p, 0).unwrap();
        assert_eq!(out.states, s.states);
    }

    #[test]
    fn hand_example_ring4() {
        let mut g = build_graph(
            &GraphSpec { topology: Topology::Ring { len: 4 }, seed: 0 },
            1,
            3,
            2,
        )
        .unwrap();
        for i in 1..4 {
            g.set_state(NodeId(i), &[1.0, 0.0]).unwrap();
        }
        let s = OracleState::from_graph(&g);
        let p = UpdateParams::new(0.5, LocalFunctional::NeighborAverage { scale: 1.0 }).unwrap();
        let out = oracle_evolve(s, &Schedule::RoundRobin, &p, 1).unwrap();
        assert_eq!(out.states[0], vec![1.0 / 3.0, 0.0]);
        assert_eq!(out.states[1], vec![1.0, 0.0]);
    }
}
