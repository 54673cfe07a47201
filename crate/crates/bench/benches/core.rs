//! Criterion benchmarks of the main `cogwyn-core` paths: exact root
//! isolation, bound evaluation, plan certification, converse replay and
//! rate sweeps.

use std::hint::black_box;

use cogwyn_core::converse::{build_sym_genie_ub1, build_sym_genie_ub2, verify_reconstruction};
use cogwyn_core::dofcalc::{sym_dof_interval, GainKind, ThresholdRule};
use cogwyn_core::schemes::{asym_plan, best_plan, certify_plan};
use cogwyn_core::simulator::{default_power_grid, random_gain_rank_trials, slope_estimate};
use cogwyn_core::tridiag::{critical_roots, det_sequence};
use cogwyn_core::{Alpha, ChannelModel, NetworkParams, Topology};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn tridiag(c: &mut Criterion) {
    let mut g = c.benchmark_group("tridiag");
    for p in [4usize, 8, 12] {
        g.bench_with_input(BenchmarkId::new("critical_roots", p), &p, |b, &p| b.iter(|| critical_roots(black_box(p))));
    }
    g.bench_function("det_sequence_64", |b| b.iter(|| det_sequence(black_box(64), black_box(0.61))));
    g.finish();
}

fn bounds(c: &mut Criterion) {
    let p = NetworkParams::new(60, 2, 1, 1, 3).unwrap();
    let generic = Alpha::parse("0.45").unwrap();
    let root = Alpha::parse("root:4:1").unwrap();
    let mut g = c.benchmark_group("dofcalc");
    g.bench_function("interval_generic_K60", |b| b.iter(|| sym_dof_interval(black_box(&p), GainKind::Equal(&generic))));
    g.bench_function("interval_root_K60", |b| b.iter(|| sym_dof_interval(black_box(&p), GainKind::Equal(&root))));
    g.finish();
}

fn schemes(c: &mut Criterion) {
    let mut g = c.benchmark_group("schemes");
    let pa = NetworkParams::new(40, 1, 1, 1, 0).unwrap();
    let ma = ChannelModel::equal(pa, Topology::Asymmetric, 0.7).unwrap();
    let plan_a = asym_plan(&pa);
    g.bench_function("certify_asym_K40", |b| b.iter(|| certify_plan(black_box(&plan_a), &ma)));
    let ps = NetworkParams::new(40, 1, 1, 1, 1).unwrap();
    let alpha = Alpha::parse("0.3").unwrap();
    let ms = ChannelModel::equal(ps, Topology::Symmetric, 0.3).unwrap();
    let plan_s = best_plan(&ps, Topology::Symmetric, &alpha).unwrap();
    g.bench_function("certify_balanced_K40", |b| b.iter(|| certify_plan(black_box(&plan_s), &ms)));
    g.finish();
}

fn converse(c: &mut Criterion) {
    let mut g = c.benchmark_group("converse");
    g.sample_size(20);
    let p = NetworkParams::new(30, 1, 1, 1, 1).unwrap();
    let m = ChannelModel::equal(p, Topology::Symmetric, 0.9).unwrap();
    let ub1 = build_sym_genie_ub1(&p, 0.9, ThresholdRule::Statement).unwrap();
    g.bench_function("ub1_K30_100_trials", |b| b.iter(|| verify_reconstruction(black_box(&ub1), &m, 100, 1, 1e-8)));
    let root = Alpha::parse("root:3:1").unwrap();
    let mr = ChannelModel::equal(p, Topology::Symmetric, root.value()).unwrap();
    let ub2 = build_sym_genie_ub2(&p, &root, ThresholdRule::Prose).unwrap();
    g.bench_function("ub2_K30_100_trials", |b| b.iter(|| verify_reconstruction(black_box(&ub2), &mr, 100, 1, 1e-8)));
    g.finish();
}

fn simulator(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulator");
    let p = NetworkParams::new(20, 1, 1, 1, 1).unwrap();
    let alpha = Alpha::parse("0.3").unwrap();
    let m = ChannelModel::equal(p, Topology::Symmetric, 0.3).unwrap();
    let plan = best_plan(&p, Topology::Symmetric, &alpha).unwrap();
    let grid = default_power_grid();
    g.bench_function("slope_K20", |b| b.iter(|| slope_estimate(black_box(&plan), &m, &grid, "bench")));
    g.sample_size(10);
    g.bench_function("rank_trials_K20_x20", |b| b.iter(|| random_gain_rank_trials(20, Topology::Symmetric, 20, black_box(1))));
    g.finish();
}

criterion_group!(benches, tridiag, bounds, schemes, converse, simulator);
criterion_main!(benches);
