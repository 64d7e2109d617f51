//! Subcommand implementations. Every output is a pure function of the
//! config plus the code version; nothing time- or platform-dependent goes
//! into the files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use blgc_core::hilbert::{
    check_operator_bound, check_update_identity, induced_lipschitz, measure_c0,
    write_certificates_csv, BoundCertificate,
};
use blgc_core::metrics::{write_metrics_csv, write_sweep_csv};
use blgc_core::{
    build_graph, evolve, scale_sweep, EvolveOptions, Error, GraphState, NodeId, ReplayDigest,
    Snapshot, Topology, TopologyFamily, NORM_EPS,
};

use crate::config::RunConfig;

const IDENTITY_TOL: f64 = 1e-10;
const SLACK_TOL: f64 = -1e-10;
const DELTA_TOL: f64 = 2.0 + 1e-12;

pub enum CmdError {
    Invariant(String),
    Io(String),
    Other(String),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => CmdError::Io(e.to_string()),
            Error::MonitorViolation { .. }
            | Error::NormViolation { .. }
            | Error::CapViolation { .. }
            | Error::ConstructionViolatesCap { .. } => CmdError::Invariant(e.to_string()),
            other => CmdError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e.to_string())
    }
}

fn build_initial_state(cfg: &RunConfig) -> Result<GraphState, CmdError> {
    let mut g = build_graph(&cfg.graph_spec, cfg.radius, cfg.cap, cfg.dim)?;
    g.init_state(cfg.init, cfg.init_seed);
    Ok(g)
}

fn evolve_from_config(cfg: &RunConfig, collect_metrics: bool) -> Result<blgc_core::Trajectory, CmdError> {
    let g = build_initial_state(cfg)?;
    let opts = EvolveOptions {
        collect_metrics,
        start_step: 0,
        mutations: cfg.mutations.clone(),
        norm_monitor: cfg.norm_monitor,
        norm_crosscheck_every: cfg.norm_crosscheck_every,
    };
    Ok(evolve(g, &cfg.schedule, &cfg.params, cfg.steps, &opts)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CmdError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn cmd_evolve(cfg: &RunConfig, out: &Path, stride: u64, quiet: bool) -> Result<(), CmdError> {
    let traj = evolve_from_config(cfg, true)?;

    let mut metrics_csv = Vec::new();
    write_metrics_csv(&traj.metrics, stride, &mut metrics_csv)?;
    write_file(&out.join("metrics.csv"), &metrics_csv)?;

    let mut snapshot_bytes = Vec::new();
    Snapshot::from_graph(&traj.final_state).write_to(&mut snapshot_bytes)?;
    write_file(&out.join("final.snapshot"), &snapshot_bytes)?;

    let digest = ReplayDigest::of_graph(&traj.final_state);
    write_file(&out.join("digest.txt"), format!("{digest}\n").as_bytes())?;
    if !quiet {
        println!("evolved {} steps, digest {digest}", traj.steps);
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path, quiet: bool) -> Result<(), CmdError> {
    if cfg.sweep_sizes.is_empty() {
        return Err(CmdError::Other("sweep.sizes: required for the sweep subcommand".into()));
    }
    if !matches!(cfg.graph_spec.topology, Topology::Ring { .. }) {
        return Err(CmdError::Other(
            "sweep supports the ring topology family (size-independent local structure)".into(),
        ));
    }
    let result = scale_sweep(
        TopologyFamily::Ring,
        &cfg.sweep_sizes,
        cfg.radius,
        cfg.cap,
        cfg.dim,
        &cfg.params,
        cfg.sweep_steps,
        cfg.init_seed,
    )?;
    let mut csv = Vec::new();
    write_sweep_csv(&result, &mut csv)?;
    write_file(&out.join("sweep.csv"), &csv)?;
    if !quiet {
        for row in &result.rows {
            println!(
                "M={} mean_reads={} mean_flops={} wall_ns_median={:.1}",
                row.node_count, row.mean_reads, row.mean_flops, row.wall_ns_median
            );
        }
        println!("wall-clock is informative only; operation counts are the asserted quantity");
    }
    Ok(())
}

pub fn cmd_verify(cfg: &RunConfig, out: &Path, quiet: bool) -> Result<(), CmdError> {
    let mut certificates: Vec<BoundCertificate> = Vec::new();
    let mut violations: Vec<String> = Vec::new();

    let g = if let Some(snapshot_path) = &cfg.verify_snapshot {
        let bytes = fs::read(snapshot_path)?;
        let snap = Snapshot::read_from(&mut &bytes[..])?;
        // Admissibility on the raw data so a corrupted snapshot is reported
        // (by node) instead of rejected at load.
        let mut bad = None;
        for i in 0..snap.node_count {
            let block = &snap.states[i * snap.dim..(i + 1) * snap.dim];
            let norm = block.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !(norm <= 1.0 + NORM_EPS) {
                certificates.push(BoundCertificate {
                    node: NodeId(i as u32),
                    pre_norm: norm,
                    post_norm: f64::NAN,
                    residual: f64::NAN,
                    slack: f64::NAN,
                    lipschitz: f64::NAN,
                    c0: f64::NAN,
                });
                violations.push(format!("node {i}: state norm {norm} exceeds the unit ball"));
                bad = Some(());
            }
        }
        if bad.is_some() {
            let mut csv = Vec::new();
            write_certificates_csv(&certificates, &mut csv)?;
            write_file(&out.join("certificates.csv"), &csv)?;
            return Err(CmdError::Invariant(violations.join("; ")));
        }
        snap.into_graph()?
    } else {
        build_initial_state(cfg)?
    };

    g.check_cap_by_bfs()?;

    let lipschitz = induced_lipschitz(&cfg.params);
    // C0 varies only with local arity; report the max over sampled nodes.
    let trials = cfg.verify_trials.max(1);
    let m = g.node_count();
    for k in 0..trials {
        let node = NodeId((k % m) as u32);
        let c0 = measure_c0(&g, node, &cfg.params)?;
        let identity = check_update_identity(&g, node, &cfg.params)?;
        let bound = check_operator_bound(&g, node, &cfg.params, lipschitz, c0)?;
        let delta = blgc_core::hilbert::check_delta_bound(&g, node, &cfg.params)?;
        if identity.residual > IDENTITY_TOL {
            violations.push(format!("node {node}: identity residual {}", identity.residual));
        }
        if bound.slack < SLACK_TOL {
            violations.push(format!("node {node}: operator bound slack {}", bound.slack));
        }
        if delta > DELTA_TOL {
            violations.push(format!("node {node}: increment norm {delta}"));
        }
        certificates.push(BoundCertificate {
            node,
            pre_norm: identity.pre_norm,
            post_norm: identity.post_norm,
            residual: identity.residual,
            slack: bound.slack,
            lipschitz,
            c0,
        });
    }

    let mut csv = Vec::new();
    write_certificates_csv(&certificates, &mut csv)?;
    write_file(&out.join("certificates.csv"), &csv)?;

    if violations.is_empty() {
        if !quiet {
            println!("verify: {trials} certificates, no violations");
        }
        Ok(())
    } else {
        Err(CmdError::Invariant(violations.join("; ")))
    }
}

pub fn cmd_replay(cfg: &RunConfig, out: &Path, quiet: bool) -> Result<(), CmdError> {
    let digest_path = out.join("digest.txt");
    let recorded = fs::read_to_string(&digest_path)?;
    let recorded = ReplayDigest::from_hex(&recorded)?;
    let traj = evolve_from_config(cfg, false)?;
    let fresh = ReplayDigest::of_graph(&traj.final_state);
    if fresh == recorded {
        if !quiet {
            println!("replay: digests match ({fresh})");
        }
        Ok(())
    } else {
        Err(CmdError::Invariant(format!(
            "replay digest mismatch: recorded {recorded}, recomputed {fresh}"
        )))
    }
}

pub fn resolve_out_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

pub fn print_error(prefix: &str, msg: &str) {
    let mut stderr = std::io::stderr();
    let _ = writeln!(stderr, "{prefix}: {msg}");
}
