use ane_bench::fixture_network;
use ane_core::partition::physical_partition;
use ane_core::problems::{problem_two_segments, target_transition, ResidualSystem};
use ane_core::quadrature::make_grid;
use ane_core::RectDomain;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn network(c: &mut Criterion) {
    let grid = make_grid(RectDomain::symmetric_unit(), 200).unwrap();
    let net = fixture_network(&[18, 5]);
    let coeffs = vec![1.0; grid.len()];
    c.bench_function("eval 2-18-5-1 on 200x200", |b| b.iter(|| net.eval(black_box(&grid.points)).unwrap()));
    c.bench_function("grad_params 2-18-5-1 on 200x200", |b| {
        b.iter(|| net.grad_params(black_box(&grid.points), &coeffs).unwrap())
    });
}

fn partition(c: &mut Criterion) {
    let domain = RectDomain::symmetric_unit();
    for widths in [vec![18], vec![18, 5], vec![13, 10]] {
        let net = fixture_network(&widths);
        let label = format!("partition {widths:?}");
        c.bench_function(&label, |b| b.iter(|| physical_partition(black_box(&net), &domain)));
    }
}

fn loss(c: &mut Criterion) {
    let t = target_transition(0.01).unwrap();
    let grid = make_grid(t.domain, 200).unwrap();
    let fit = ResidualSystem::function_fit(&t, &grid);
    let net = fixture_network(&[18, 5]);
    c.bench_function("function fit loss_and_grad m=200", |b| b.iter(|| fit.loss_and_grad(black_box(&net)).unwrap()));

    let p = problem_two_segments();
    let grid = make_grid(p.domain, 100).unwrap();
    let inflow = p.inflow(100).unwrap();
    let lsnn = ResidualSystem::lsnn(&p, &grid, &inflow);
    let net = fixture_network(&[7, 4]);
    c.bench_function("advection loss_and_grad m=100", |b| b.iter(|| lsnn.loss_and_grad(black_box(&net)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = network, partition, loss
}
criterion_main!(benches);
