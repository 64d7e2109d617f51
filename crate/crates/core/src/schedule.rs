//! Deterministic node schedules and the evolution loop
//! S_{t+1} = G_{pi(t)}(S_t).

use crate::error::{Error, Result};
use crate::generator::{apply_in_place, Scratch, UpdateParams};
use crate::graph::{EdgeOp, GraphState, NodeId, NORM_EPS};
use crate::hilbert;
use crate::metrics::StepMetrics;
use crate::rng::{mix64, SplitMix64};

#[derive(Clone, Debug)]
pub enum Schedule {
    /// pi(t) = t mod M.
    RoundRobin,
    /// pi(t) = list[t mod len].
    ExplicitCycle(Vec<NodeId>),
    /// Each sweep of M steps visits every node once, in a permutation
    /// derived from (seed, sweep index) via SplitMix64 + Fisher-Yates.
    SeededSweep { seed: u64 },
    /// Cycles through a BFS order of the graph from `start` (neighbors in
    /// ascending order, unreachable nodes appended ascending), fixed before
    /// the run.
    FrontierBfs { start: NodeId },
}

fn sweep_permutation(seed: u64, sweep: u64, node_count: usize) -> Vec<NodeId> {
    let mut perm: Vec<NodeId> = (0..node_count as u32).map(NodeId).collect();
    let mut rng = SplitMix64::new(seed ^ mix64(sweep));
    rng.shuffle(&mut perm);
    perm
}

fn bfs_order(g: &GraphState, start: NodeId) -> Result<Vec<NodeId>> {
    g.neighborhood(start)?; // node existence check
    let mut order = Vec::with_capacity(g.node_count());
    let mut seen = vec![false; g.node_count()];
    let mut queue = std::collections::VecDeque::new();
    seen[start.index()] = true;
    queue.push_back(start);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        // Adjacency lists are sorted, so this explores neighbors ascending.
        for &v in g.adjacent(u)? {
            if !seen[v.index()] {
                seen[v.index()] = true;
                queue.push_back(v);
            }
        }
    }
    for v in g.nodes() {
        if !seen[v.index()] {
            order.push(v);
        }
    }
    Ok(order)
}

/// Pure schedule evaluation: which node is updated at step t.
pub fn schedule_node(sched: &Schedule, g: &GraphState, t: u64) -> Result<NodeId> {
    let m = g.node_count() as u64;
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    match sched {
        Schedule::RoundRobin => Ok(NodeId((t % m) as u32)),
        Schedule::ExplicitCycle(list) => {
            if list.is_empty() {
                return Err(Error::EmptyGraph);
            }
            let i = list[(t % list.len() as u64) as usize];
            if i.index() >= g.node_count() {
                return Err(Error::UnknownNode(i));
            }
            Ok(i)
        }
        Schedule::SeededSweep { seed } => {
            let perm = sweep_permutation(*seed, t / m, g.node_count());
            Ok(perm[(t % m) as usize])
        }
        Schedule::FrontierBfs { start } => {
            let order = bfs_order(g, *start)?;
            Ok(order[(t % m) as usize])
        }
    }
}

/// Schedule compiled against a graph for O(1) amortized lookup in the
/// evolution loop. Agrees with `schedule_node` at every step.
enum Resolved {
    RoundRobin { m: u64 },
    Cycle { list: Vec<NodeId> },
    Sweep { seed: u64, m: u64, current: u64, perm: Vec<NodeId> },
    Order { list: Vec<NodeId> },
}

impl Resolved {
    fn new(sched: &Schedule, g: &GraphState) -> Result<Self> {
        let m = g.node_count() as u64;
        if m == 0 {
            return Err(Error::EmptyGraph);
        }
        Ok(match sched {
            Schedule::RoundRobin => Resolved::RoundRobin { m },
            Schedule::ExplicitCycle(list) => {
                if list.is_empty() {
                    return Err(Error::EmptyGraph);
                }
                for &i in list {
                    if i.index() >= g.node_count() {
                        return Err(Error::UnknownNode(i));
                    }
                }
                Resolved::Cycle { list: list.clone() }
            }
            Schedule::SeededSweep { seed } => Resolved::Sweep {
                seed: *seed,
                m,
                current: u64::MAX,
                perm: Vec::new(),
            },
            Schedule::FrontierBfs { start } => Resolved::Order { list: bfs_order(g, *start)? },
        })
    }

    fn node_at(&mut self, t: u64) -> NodeId {
        match self {
            Resolved::RoundRobin { m } => NodeId((t % *m) as u32),
            Resolved::Cycle { list } => list[(t % list.len() as u64) as usize],
            Resolved::Sweep { seed, m, current, perm } => {
                let sweep = t / *m;
                if sweep != *current {
                    *perm = sweep_permutation(*seed, sweep, *m as usize);
                    *current = sweep;
                }
                perm[(t % *m) as usize]
            }
            Resolved::Order { list } => list[(t % list.len() as u64) as usize],
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    /// Record one StepMetrics row per step.
    pub collect_metrics: bool,
    /// First step index; schedules and mutation steps are absolute, so a run
    /// of `a` steps followed by a run of `b` steps starting at `a` equals one
    /// run of `a + b` steps.
    pub start_step: u64,
    /// Edge mutations applied between steps: a mutation tagged with step t
    /// fires just before generator application t.
    pub mutations: Vec<(u64, EdgeOp)>,
    /// Fatal check that every written state stays in the unit ball.
    pub norm_monitor: bool,
    /// Cross-check the incrementally maintained global squared norm against
    /// a full compensated recomputation every this many steps (0 = off).
    pub norm_crosscheck_every: u64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            collect_metrics: false,
            start_step: 0,
            mutations: Vec::new(),
            norm_monitor: true,
            norm_crosscheck_every: 10_000,
        }
    }
}

#[derive(Debug)]
pub struct Trajectory {
    pub final_state: GraphState,
    pub start_step: u64,
    pub steps: u64,
    pub metrics: Vec<StepMetrics>,
}

const NORM_DRIFT_TOL: f64 = 1e-9;

/// Run `steps` generator applications in schedule order. `steps = 0` returns
/// the state unchanged. Monitor violations abort with full context.
pub fn evolve(
    mut g: GraphState,
    sched: &Schedule,
    p: &UpdateParams,
    steps: u64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let mut resolved = Resolved::new(sched, &g)?;
    let mut scratch = Scratch::new(g.dim());
    let mut metrics = if opts.collect_metrics {
        Vec::with_capacity(steps.min(1 << 24) as usize)
    } else {
        Vec::new()
    };
    let mut mutations: Vec<(u64, EdgeOp)> = opts.mutations.clone();
    mutations.sort_by_key(|&(t, _)| t);
    let mut next_mutation = 0usize;

    let track_norm = opts.norm_crosscheck_every > 0;
    let mut norm_sq = if track_norm { hilbert::global_l2_norm_sq(&g) } else { 0.0 };
    let cap = g.cap() as u64;

    for t in opts.start_step..opts.start_step + steps {
        while next_mutation < mutations.len() && mutations[next_mutation].0 == t {
            g.mutate_edge(mutations[next_mutation].1)?;
            next_mutation += 1;
        }
        let i = resolved.node_at(t);
        let old_norm_sq = if track_norm {
            g.state(i).iter().map(|c| c * c).sum::<f64>()
        } else {
            0.0
        };
        let (counters, new_norm) = apply_in_place(&mut g, i, p, &mut scratch)?;
        if counters.state_reads > cap {
            return Err(Error::MonitorViolation {
                step: t,
                node: i,
                detail: format!("state_reads {} exceeds cap {cap}", counters.state_reads),
            });
        }
        if opts.norm_monitor && !(new_norm <= 1.0 + NORM_EPS) {
            return Err(Error::MonitorViolation {
                step: t,
                node: i,
                detail: format!("node norm {new_norm} exceeds unit ball"),
            });
        }
        if track_norm {
            norm_sq += new_norm * new_norm - old_norm_sq;
            if (t + 1) % opts.norm_crosscheck_every == 0 {
                let full = hilbert::global_l2_norm_sq(&g);
                let drift = (norm_sq - full).abs() / full.max(1.0);
                if drift > NORM_DRIFT_TOL {
                    return Err(Error::MonitorViolation {
                        step: t,
                        node: i,
                        detail: format!(
                            "incremental norm drift {drift} exceeds {NORM_DRIFT_TOL}"
                        ),
                    });
                }
                norm_sq = full;
            }
        }
        if opts.collect_metrics {
            metrics.push(StepMetrics {
                step: t,
                node: i,
                state_reads: counters.state_reads,
                state_writes: counters.state_writes,
                flop_proxy: counters.flop_proxy,
                max_norm: new_norm,
            });
        }
    }
    Ok(Trajectory { final_state: g, start_step: opts.start_step, steps, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digest::ReplayDigest;
    use crate::functional::LocalFunctional;
    use crate::graph::{build_graph, GraphSpec, InitKind, Topology};
    use proptest::prelude::*;

    fn ring(len: usize, dim: usize) -> GraphState {
        build_graph(&GraphSpec { topology: Topology::Ring { len }, seed: 0 }, 1, 3, dim).unwrap()
    }

    #[test]
    fn round_robin_sequence() {
        let g = ring(5, 2);
        let got: Vec<u32> = (0..7)
            .map(|t| schedule_node(&Schedule::RoundRobin, &g, t).unwrap().0)
            .collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4, 0, 1]);
    }

    #[test]
    fn explicit_cycle_wraps() {
        let g = ring(6, 2);
        let sched = Schedule::ExplicitCycle(vec![NodeId(3), NodeId(1), NodeId(4)]);
        assert_eq!(schedule_node(&sched, &g, 4).unwrap(), NodeId(1));
    }

    #[test]
    fn seeded_sweep_is_pure_and_covers_each_sweep() {
        let g = ring(8, 2);
        let sched = Schedule::SeededSweep { seed: 123 };
        assert_eq!(
            schedule_node(&sched, &g, 1_000_000).unwrap(),
            schedule_node(&sched, &g, 1_000_000).unwrap()
        );
        let mut first_sweep: Vec<u32> =
            (0..8).map(|t| schedule_node(&sched, &g, t).unwrap().0).collect();
        first_sweep.sort_unstable();
        assert_eq!(first_sweep, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn frontier_bfs_orders_from_start() {
        let g = ring(5, 2);
        let sched = Schedule::FrontierBfs { start: NodeId(2) };
        let got: Vec<u32> = (0..5).map(|t| schedule_node(&sched, &g, t).unwrap().0).collect();
        assert_eq!(got, vec![2, 1, 3, 0, 4]);
    }

    #[test]
    fn zero_steps_is_identity() {
        let mut g = ring(6, 2);
        g.init_state(InitKind::UniformBall, 4);
        let before = g.states_flat().to_vec();
        let p = UpdateParams::new(0.5, LocalFunctional::NeighborAverage { scale: 1.0 }).unwrap();
        let traj = evolve(g, &Schedule::RoundRobin, &p, 0, &EvolveOptions::default()).unwrap();
        assert_eq!(traj.final_state.states_flat(), &before[..]);
    }

    #[test]
    fn zero_functional_leaves_state_bit_identical() {
        let mut g = ring(6, 2);
        g.init_state(InitKind::UniformBall, 4);
        let before = g.states_flat().to_vec();
        let p = UpdateParams::new(1.0, LocalFunctional::Zero).unwrap();
        let traj = evolve(g, &Schedule::RoundRobin, &p, 100, &EvolveOptions::default()).unwrap();
        assert_eq!(traj.final_state.states_flat(), &before[..]);
    }

    #[test]
    fn hand_example_single_step() {
        let mut g = ring(4, 2);
        for i in 1..4 {
            g.set_state(NodeId(i), &[1.0, 0.0]).unwrap();
        }
        let p = UpdateParams::new(0.5, LocalFunctional::NeighborAverage { scale: 1.0 }).unwrap();
        let traj = evolve(g, &Schedule::RoundRobin, &p, 1, &EvolveOptions::default()).unwrap();
        assert_eq!(traj.final_state.state(NodeId(0)), &[1.0 / 3.0, 0.0]);
        for i in 1..4 {
            assert_eq!(traj.final_state.state(NodeId(i)), &[1.0, 0.0]);
        }
    }

    #[test]
    fn composition_split_matches_single_run() {
        let mut g = ring(9, 3);
        g.init_state(InitKind::UniformBall, 8);
        let p = UpdateParams::new(0.3, LocalFunctional::SaturatedMix { gain: 1.0, bias: 0.0 })
            .unwrap();
        let sched = Schedule::SeededSweep { seed: 5 };
        let full = evolve(g.clone(), &sched, &p, 50, &EvolveOptions::default()).unwrap();
        let first = evolve(g, &sched, &p, 20, &EvolveOptions::default()).unwrap();
        let second = evolve(
            first.final_state,
            &sched,
            &p,
            30,
            &EvolveOptions { start_step: 20, ..EvolveOptions::default() },
        )
        .unwrap();
        assert_eq!(full.final_state.states_flat(), second.final_state.states_flat());
    }

    #[test]
    fn mutations_fire_between_steps() {
        let mut g = ring(10, 2);
        g.init_state(InitKind::UniformBall, 2);
        let p = UpdateParams::new(0.2, LocalFunctional::NeighborAverage { scale: 1.0 }).unwrap();
        let opts = EvolveOptions {
            mutations: vec![
                (3, EdgeOp::Remove(NodeId(0), NodeId(1))),
                (7, EdgeOp::Add(NodeId(0), NodeId(1))),
            ],
            ..EvolveOptions::default()
        };
        let traj = evolve(g, &Schedule::RoundRobin, &p, 20, &opts).unwrap();
        traj.final_state.check_cap_by_bfs().unwrap();
    }

    #[test]
    fn replay_digests_agree() {
        let make = || {
            let mut g = ring(12, 2);
            g.init_state(InitKind::UniformBall, 33);
            let p =
                UpdateParams::new(0.4, LocalFunctional::CurvedRotation { angle: 0.5, amplitude: 1.0 })
                    .unwrap();
            evolve(g, &Schedule::SeededSweep { seed: 2 }, &p, 200, &EvolveOptions::default())
                .unwrap()
        };
        let a = make();
        let b = make();
        assert_eq!(
            ReplayDigest::of_graph(&a.final_state),
            ReplayDigest::of_graph(&b.final_state)
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn schedules_always_return_valid_nodes(
            t in 0u64..10_000,
            len in 3usize..30,
            seed in any::<u64>(),
        ) {
            let g = ring(len, 2);
            for sched in [
                Schedule::RoundRobin,
                Schedule::SeededSweep { seed },
                Schedule::FrontierBfs { start: NodeId(0) },
            ] {
                let i = schedule_node(&sched, &g, t).unwrap();
                prop_assert!(i.index() < len);
            }
        }
    }
}
