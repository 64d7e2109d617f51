//! Per-update work instrumentation and the scaling sweep.
//!
//! Operation counts (reads, writes, flop proxy) are explicit counter
//! increments at the implementation level and depend only on the local
//! structure (neighborhood size, state dimension, functional kind), never on
//! data values or total node count. Wall-clock time is measured with a
//! monotonic clock, reported as median/IQR over batches, and is informative
//! only: memory-hierarchy effects are outside the operation-count model.

use std::io::Write;
use std::time::Instant;

use crate::error::Result;
use crate::generator::{StepCounters, UpdateParams};
use crate::graph::{build_graph, GraphSpec, InitKind, NodeId, Topology};
use crate::schedule::{evolve, EvolveOptions, Schedule};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMetrics {
    pub step: u64,
    pub node: NodeId,
    pub state_reads: u64,
    pub state_writes: u64,
    pub flop_proxy: u64,
    /// Norm of the state written at this step (the only block that changed).
    pub max_norm: f64,
}

/// Fold raw counters from one generator application into a metrics row.
pub fn record_step(step: u64, node: NodeId, counters: StepCounters, norm: f64) -> StepMetrics {
    StepMetrics {
        step,
        node,
        state_reads: counters.state_reads,
        state_writes: counters.state_writes,
        flop_proxy: counters.flop_proxy,
        max_norm: norm,
    }
}

/// Metrics CSV: t,node,reads,writes,flops,max_norm. `stride` decimates
/// (1 = every row). Floats use the shortest round-trip representation.
pub fn write_metrics_csv<W: Write>(rows: &[StepMetrics], stride: u64, w: &mut W) -> Result<()> {
    writeln!(w, "t,node,reads,writes,flops,max_norm")?;
    let stride = stride.max(1);
    for row in rows.iter().filter(|r| r.step % stride == 0) {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.step, row.node, row.state_reads, row.state_writes, row.flop_proxy, row.max_norm
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub node_count: usize,
    pub steps: u64,
    pub radius: usize,
    pub cap: usize,
    pub dim: usize,
    pub kind: String,
    pub mean_reads: f64,
    pub max_reads: u64,
    pub mean_flops: f64,
    pub max_flops: u64,
    pub wall_ns_median: f64,
    pub wall_ns_iqr: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Topology families whose local structure does not depend on size.
#[derive(Clone, Copy, Debug)]
pub enum TopologyFamily {
    Ring,
}

impl TopologyFamily {
    fn spec(self, node_count: usize) -> GraphSpec {
        match self {
            TopologyFamily::Ring => {
                GraphSpec { topology: Topology::Ring { len: node_count }, seed: 0 }
            }
        }
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Run the same experiment at several sizes and record operation counts and
/// wall time per step. Counts are exactly size-invariant for families with
/// size-independent local structure.
pub fn scale_sweep(
    family: TopologyFamily,
    sizes: &[usize],
    radius: usize,
    cap: usize,
    dim: usize,
    p: &UpdateParams,
    steps: u64,
    init_seed: u64,
) -> Result<SweepResult> {
    let mut result = SweepResult::default();
    for &node_count in sizes {
        let mut g = build_graph(&family.spec(node_count), radius, cap, dim)?;
        g.init_state(InitKind::UniformBall, init_seed);

        let batches = 16u64.min(steps).max(1);
        let base = steps / batches;
        let extra = steps % batches;

        let mut reads_sum = 0u128;
        let mut flops_sum = 0u128;
        let mut max_reads = 0u64;
        let mut max_flops = 0u64;
        let mut per_step_ns = Vec::with_capacity(batches as usize);
        let mut start_step = 0u64;
        for b in 0..batches {
            let batch_steps = base + u64::from(b < extra);
            if batch_steps == 0 {
                continue;
            }
            let opts = EvolveOptions {
                collect_metrics: true,
                start_step,
                norm_crosscheck_every: 0,
                ..EvolveOptions::default()
            };
            let clock = Instant::now();
            let traj = evolve(g, &Schedule::RoundRobin, p, batch_steps, &opts)?;
            let elapsed = clock.elapsed().as_nanos() as f64;
            per_step_ns.push(elapsed / batch_steps as f64);
            for row in &traj.metrics {
                reads_sum += row.state_reads as u128;
                flops_sum += row.flop_proxy as u128;
                max_reads = max_reads.max(row.state_reads);
                max_flops = max_flops.max(row.flop_proxy);
            }
            g = traj.final_state;
            start_step += batch_steps;
        }
        per_step_ns.sort_by(f64::total_cmp);
        result.rows.push(SweepRow {
            node_count,
            steps,
            radius,
            cap,
            dim,
            kind: p.functional.kind_name().to_string(),
            mean_reads: reads_sum as f64 / steps as f64,
            max_reads,
            mean_flops: flops_sum as f64 / steps as f64,
            max_flops,
            wall_ns_median: percentile(&per_step_ns, 0.5),
            wall_ns_iqr: percentile(&per_step_ns, 0.75) - percentile(&per_step_ns, 0.25),
        });
    }
    Ok(result)
}

/// Sweep CSV with the fixed column order:
/// M,T,r,D,d,kind,mean_reads,max_reads,mean_flops,max_flops,wall_ns_median,wall_ns_iqr
pub fn write_sweep_csv<W: Write>(result: &SweepResult, w: &mut W) -> Result<()> {
    writeln!(
        w,
        "M,T,r,D,d,kind,mean_reads,max_reads,mean_flops,max_flops,wall_ns_median,wall_ns_iqr"
    )?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.node_count,
            r.steps,
            r.radius,
            r.cap,
            r.dim,
            r.kind,
            r.mean_reads,
            r.max_reads,
            r.mean_flops,
            r.max_flops,
            r.wall_ns_median,
            r.wall_ns_iqr
        )?;
    }
    Ok(())
}
