//! Per-update cost across ring sizes. The point of the measurement is the
//! scaling, not the absolute number: the time per update should stay flat as
//! the ring grows from 10^3 to 10^6 nodes, because each update touches only
//! a radius-1 ball of at most 3 nodes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use blgc_core::{
    apply_generator, build_graph, schedule_node, GraphSpec, GraphState, InitKind,
    LocalFunctional, Schedule, Topology, UpdateParams,
};

fn ring(len: usize, dim: usize) -> GraphState {
    let mut g = build_graph(
        &GraphSpec { topology: Topology::Ring { len }, seed: 7 },
        1,
        3,
        dim,
    )
    .expect("ring construction");
    g.init_state(InitKind::UniformBall, 42);
    g
}

fn bench_apply(c: &mut Criterion) {
    let params = UpdateParams::new(
        0.2,
        LocalFunctional::SaturatedMix { gain: 0.8, bias: 0.1 },
    )
    .expect("valid params");
    let sched = Schedule::RoundRobin;

    let mut group = c.benchmark_group("apply_generator_ring");
    group.throughput(Throughput::Elements(1));
    for &len in &[1_000usize, 10_000, 100_000, 1_000_000] {
        let g = ring(len, 8);
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, _| {
            let mut g = g.clone();
            let mut t: u64 = 0;
            b.iter(|| {
                let i = schedule_node(&sched, &g, t).expect("schedule");
                apply_generator(&mut g, i, &params).expect("apply");
                t += 1;
            });
        });
    }
    group.finish();
}

fn bench_functionals(c: &mut Criterion) {
    let g = ring(10_000, 8);
    let kinds: [(&str, LocalFunctional); 4] = [
        ("zero", LocalFunctional::Zero),
        ("neighbor_average", LocalFunctional::NeighborAverage { scale: 1.0 }),
        ("saturated_mix", LocalFunctional::SaturatedMix { gain: 0.8, bias: 0.1 }),
        (
            "curved_rotation",
            LocalFunctional::CurvedRotation { angle: 0.3, amplitude: 0.9 },
        ),
    ];
    let mut group = c.benchmark_group("functional_kinds_ring_10k");
    group.throughput(Throughput::Elements(1));
    for (name, f) in kinds {
        let params = UpdateParams::new(0.2, f).expect("valid params");
        group.bench_function(name, |b| {
            let mut g = g.clone();
            let mut t: u64 = 0;
            b.iter(|| {
                let i = schedule_node(&Schedule::RoundRobin, &g, t).expect("schedule");
                apply_generator(&mut g, i, &params).expect("apply");
                t += 1;
            });
        });
    }
    group.finish();
}

criterion_group!(benches, bench_apply, bench_functionals);
criterion_main!(benches);
