//! Run configuration: one flat TOML file that fully determines every output
//! byte. Validation collects every violation with its key path, not just the
//! first.

use serde::Deserialize;

use blgc_core::functional::FUNCTIONAL_KINDS;
use blgc_core::{
    EdgeOp, GraphSpec, InitKind, LocalFunctional, NodeId, Schedule, Topology, UpdateParams,
};

#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Validation(Vec<String>),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse(msg) => write!(f, "parse error: {msg}"),
            ConfigError::Validation(errors) => {
                writeln!(f, "invalid config:")?;
                for e in errors {
                    writeln!(f, "  - {e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    graph: GraphSection,
    functional: FunctionalSection,
    #[serde(default)]
    update: UpdateSection,
    #[serde(default)]
    schedule: ScheduleSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    mutation: Vec<MutationEntry>,
    #[serde(default)]
    monitors: MonitorsSection,
    #[serde(default)]
    sweep: Option<SweepSection>,
    #[serde(default)]
    verify: Option<VerifySection>,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct GraphSection {
    topology: String,
    #[serde(default)]
    m: Option<usize>,
    #[serde(default)]
    rows: Option<usize>,
    #[serde(default)]
    cols: Option<usize>,
    #[serde(default)]
    degree: Option<usize>,
    #[serde(default)]
    edges: Option<Vec<(u32, u32)>>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_radius")]
    r: usize,
    #[serde(default)]
    cap: Option<usize>,
    #[serde(default = "default_dim")]
    dim: usize,
}

fn default_radius() -> usize {
    1
}

fn default_dim() -> usize {
    2
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FunctionalSection {
    kind: String,
    #[serde(default)]
    scale: Option<f64>,
    #[serde(default)]
    gain: Option<f64>,
    #[serde(default)]
    bias: Option<f64>,
    #[serde(default)]
    angle: Option<f64>,
    #[serde(default)]
    amplitude: Option<f64>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct UpdateSection {
    eta: f64,
}

impl Default for UpdateSection {
    fn default() -> Self {
        Self { eta: 0.1 }
    }
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ScheduleSection {
    kind: String,
    #[serde(default)]
    nodes: Option<Vec<u32>>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    start: u32,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self { kind: "round_robin".into(), nodes: None, seed: 0, start: 0 }
    }
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RunSection {
    #[serde(default = "default_steps")]
    steps: u64,
    #[serde(default = "default_init")]
    init: String,
    #[serde(default)]
    init_seed: u64,
}

fn default_steps() -> u64 {
    100
}

fn default_init() -> String {
    "zeros".into()
}

impl Default for RunSection {
    fn default() -> Self {
        Self { steps: default_steps(), init: default_init(), init_seed: 0 }
    }
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct MutationEntry {
    step: u64,
    op: String,
    u: u32,
    v: u32,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct MonitorsSection {
    #[serde(default = "default_true")]
    norm: bool,
    #[serde(default = "default_crosscheck")]
    norm_crosscheck_every: u64,
}

fn default_true() -> bool {
    true
}

fn default_crosscheck() -> u64 {
    10_000
}

impl Default for MonitorsSection {
    fn default() -> Self {
        Self { norm: true, norm_crosscheck_every: default_crosscheck() }
    }
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    sizes: Vec<usize>,
    #[serde(default = "default_steps")]
    steps: u64,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct VerifySection {
    #[serde(default)]
    snapshot: Option<String>,
    #[serde(default = "default_trials")]
    trials: usize,
}

fn default_trials() -> usize {
    100
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    #[serde(default)]
    dir: Option<String>,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub graph_spec: GraphSpec,
    pub radius: usize,
    pub cap: usize,
    pub dim: usize,
    pub params: UpdateParams,
    pub schedule: Schedule,
    pub steps: u64,
    pub init: InitKind,
    pub init_seed: u64,
    pub mutations: Vec<(u64, EdgeOp)>,
    pub norm_monitor: bool,
    pub norm_crosscheck_every: u64,
    pub sweep_sizes: Vec<usize>,
    pub sweep_steps: u64,
    pub verify_snapshot: Option<String>,
    pub verify_trials: usize,
    pub output_dir: Option<String>,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut errors = Vec::new();

    let topology = match file.graph.topology.as_str() {
        "ring" => match file.graph.m {
            Some(len) if len >= 3 => Some(Topology::Ring { len }),
            Some(len) => {
                errors.push(format!("graph.m: ring needs at least 3 nodes, got {len}"));
                None
            }
            None => {
                errors.push("graph.m: required for topology \"ring\"".into());
                None
            }
        },
        "torus2d" => match (file.graph.rows, file.graph.cols) {
            (Some(rows), Some(cols)) => Some(Topology::Torus2d { rows, cols }),
            _ => {
                errors.push("graph.rows, graph.cols: required for topology \"torus2d\"".into());
                None
            }
        },
        "random_regular" => match (file.graph.m, file.graph.degree) {
            (Some(nodes), Some(degree)) => Some(Topology::RandomRegular { nodes, degree }),
            _ => {
                errors.push(
                    "graph.m, graph.degree: required for topology \"random_regular\"".into(),
                );
                None
            }
        },
        "explicit_edge_list" => match (file.graph.m, &file.graph.edges) {
            (Some(nodes), Some(edges)) => {
                Some(Topology::Explicit { nodes, edges: edges.clone() })
            }
            _ => {
                errors.push(
                    "graph.m, graph.edges: required for topology \"explicit_edge_list\"".into(),
                );
                None
            }
        },
        other => {
            errors.push(format!(
                "graph.topology: unknown topology \"{other}\" (permitted: ring, torus2d, random_regular, explicit_edge_list)"
            ));
            None
        }
    };

    if file.graph.r < 1 {
        errors.push("graph.r: radius must be >= 1".into());
    }
    if file.graph.dim < 1 {
        errors.push("graph.dim: dimension must be >= 1".into());
    }
    // Default cap: tight for a radius-r ring; other topologies should set it.
    let cap = file.graph.cap.unwrap_or(2 * file.graph.r + 1);
    if cap < 1 {
        errors.push("graph.cap: cap must be >= 1".into());
    }

    let f = &file.functional;
    let functional = match f.kind.as_str() {
        "zero" => Some(LocalFunctional::Zero),
        "neighbor_average" => {
            Some(LocalFunctional::NeighborAverage { scale: f.scale.unwrap_or(1.0) })
        }
        "saturated_mix" => Some(LocalFunctional::SaturatedMix {
            gain: f.gain.unwrap_or(1.0),
            bias: f.bias.unwrap_or(0.0),
        }),
        "curved_rotation" => Some(LocalFunctional::CurvedRotation {
            angle: f.angle.unwrap_or(0.0),
            amplitude: f.amplitude.unwrap_or(1.0),
        }),
        other => {
            errors.push(format!(
                "functional.kind: unknown kind \"{other}\" (permitted: {})",
                FUNCTIONAL_KINDS.join(", ")
            ));
            None
        }
    };

    if !(file.update.eta > 0.0 && file.update.eta.is_finite()) {
        errors.push(format!(
            "update.eta: must be positive and finite, got {}",
            file.update.eta
        ));
    }

    let schedule = match file.schedule.kind.as_str() {
        "round_robin" => Some(Schedule::RoundRobin),
        "explicit_cycle" => match &file.schedule.nodes {
            Some(nodes) if !nodes.is_empty() => {
                Some(Schedule::ExplicitCycle(nodes.iter().map(|&n| NodeId(n)).collect()))
            }
            _ => {
                errors.push(
                    "schedule.nodes: non-empty node list required for \"explicit_cycle\"".into(),
                );
                None
            }
        },
        "seeded_permutation_sweep" => Some(Schedule::SeededSweep { seed: file.schedule.seed }),
        "frontier_bfs" => Some(Schedule::FrontierBfs { start: NodeId(file.schedule.start) }),
        other => {
            errors.push(format!(
                "schedule.kind: unknown kind \"{other}\" (permitted: round_robin, explicit_cycle, seeded_permutation_sweep, frontier_bfs)"
            ));
            None
        }
    };

    let init = match file.run.init.as_str() {
        "zeros" => Some(InitKind::Zeros),
        "uniform_ball" => Some(InitKind::UniformBall),
        "surface" => Some(InitKind::Surface),
        other => {
            errors.push(format!(
                "run.init: unknown kind \"{other}\" (permitted: zeros, uniform_ball, surface)"
            ));
            None
        }
    };

    let mut mutations = Vec::new();
    for (idx, m) in file.mutation.iter().enumerate() {
        match m.op.as_str() {
            "add" => mutations.push((m.step, EdgeOp::Add(NodeId(m.u), NodeId(m.v)))),
            "remove" => mutations.push((m.step, EdgeOp::Remove(NodeId(m.u), NodeId(m.v)))),
            other => errors.push(format!(
                "mutation[{idx}].op: unknown op \"{other}\" (permitted: add, remove)"
            )),
        }
    }

    if let Some(sweep) = &file.sweep {
        if sweep.sizes.is_empty() {
            errors.push("sweep.sizes: must be non-empty".into());
        }
    }

    if !errors.is_empty() {
        return Err(ConfigError::Validation(errors));
    }

    let params = UpdateParams::new(file.update.eta, functional.unwrap())
        .expect("eta validated above");
    let verify = file.verify.unwrap_or_default();
    Ok(RunConfig {
        graph_spec: GraphSpec { topology: topology.unwrap(), seed: file.graph.seed },
        radius: file.graph.r,
        cap,
        dim: file.graph.dim,
        params,
        schedule: schedule.unwrap(),
        steps: file.run.steps,
        init: init.unwrap(),
        init_seed: file.run.init_seed,
        mutations,
        norm_monitor: file.monitors.norm,
        norm_crosscheck_every: file.monitors.norm_crosscheck_every,
        sweep_sizes: file.sweep.as_ref().map(|s| s.sizes.clone()).unwrap_or_default(),
        sweep_steps: file.sweep.as_ref().map(|s| s.steps).unwrap_or(default_steps()),
        verify_snapshot: verify.snapshot,
        verify_trials: verify.trials,
        output_dir: file.output.dir,
    })
}
