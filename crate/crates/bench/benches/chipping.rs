use std::hint::black_box;

use chipnet::charts::SigmaChoice;
use chipnet::dimension::{box_count, dyadic_scales, s0_estimate};
use chipnet::polytope::edge_net;
use chipnet::{chip_sequence, make_seed, RatePolicy, SeedShape, WordSpace};
use criterion::{criterion_group, criterion_main, Criterion};

fn chipping(c: &mut Criterion) {
    let cube = make_seed(SeedShape::Cube);
    let policy = RatePolicy::uniform(0.05, 0.4).unwrap();
    c.bench_function("chip cube to depth 6", |b| {
        b.iter(|| chip_sequence(black_box(&cube), &policy, 6, 1).unwrap())
    });
}

fn box_counting(c: &mut Criterion) {
    let cube = make_seed(SeedShape::Cube);
    let seq = chip_sequence(&cube, &RatePolicy::constant(0.25).unwrap(), 7, 0).unwrap();
    let net = edge_net(seq.last());
    let scales = dyadic_scales(net.diameter(), 2..=7);
    c.bench_function("box count depth 7 net", |b| b.iter(|| box_count(black_box(&net), &scales).unwrap()));
}

fn pressure(c: &mut Criterion) {
    let cube = make_seed(SeedShape::Cube);
    let seq = chip_sequence(&cube, &RatePolicy::uniform(0.05, 0.4).unwrap(), 0, 3).unwrap();
    let ws = WordSpace::new(&seq, SigmaChoice::Sorted);
    let mut group = c.benchmark_group("pressure");
    group.sample_size(10);
    group.bench_function("roots at depths 4..6", |b| {
        b.iter(|| s0_estimate(&[4, 5, 6], (0.0, 3.0), 1e-3, black_box(&ws)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, chipping, box_counting, pressure);
criterion_main!(benches);
