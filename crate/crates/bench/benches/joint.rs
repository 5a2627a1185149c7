use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tjs_bench::{full_bend, plane_sweep};
use tjs_core::trace::to_csv_string;
use tjs_core::{
    allocate, arc_jacobian, deallocate, fk_ring_poses, fk_tip, ik_tip, ArcParams, BendCommand,
    JointSim, RingStackConfig, SimConfig, TendonLayout,
};

fn kinematics(c: &mut Criterion) {
    let arc = ArcParams::new(1.1, 2.3, 40.0).unwrap();
    let stack = RingStackConfig::default();
    let target = fk_tip(&arc).unwrap().position;
    c.bench_function("fk_tip", |b| b.iter(|| fk_tip(black_box(&arc))));
    c.bench_function("fk_ring_poses", |b| {
        b.iter(|| fk_ring_poses(black_box(&arc), &stack))
    });
    c.bench_function("ik_tip", |b| b.iter(|| ik_tip(black_box(&target), 40.0)));
    c.bench_function("arc_jacobian", |b| b.iter(|| arc_jacobian(black_box(&arc))));
}

fn tendon(c: &mut Criterion) {
    let layout = TendonLayout::default();
    let cmd = BendCommand::from_degrees(63.0, 211.0);
    let dl = allocate(&cmd, &layout).unwrap();
    c.bench_function("allocate", |b| {
        b.iter(|| allocate(black_box(&cmd), &layout))
    });
    c.bench_function("deallocate", |b| {
        b.iter(|| deallocate(black_box(&dl), &layout))
    });
}

fn sim(c: &mut Criterion) {
    let mut group = c.benchmark_group("sim");
    group.bench_function("step", |b| {
        let mut sim = JointSim::new(SimConfig::default()).unwrap();
        sim.set_target(BendCommand::from_degrees(45.0, 30.0), 2000.0)
            .unwrap();
        b.iter(|| sim.step_default())
    });
    group.sample_size(20);
    let script = full_bend();
    group.bench_function("run_script_full_bend_3s", |b| {
        b.iter(|| {
            JointSim::new(SimConfig::default())
                .unwrap()
                .run_script(black_box(&script))
                .unwrap()
        })
    });
    let sweep = plane_sweep(10_000);
    let trace = JointSim::new(SimConfig::default())
        .unwrap()
        .run_script(&sweep)
        .unwrap();
    group.bench_function("csv_plane_sweep_10s", |b| {
        b.iter(|| to_csv_string(black_box(&trace)))
    });
    group.finish();
}

criterion_group!(benches, kinematics, tendon, sim);
criterion_main!(benches);
