use criterion::{criterion_group, criterion_main, Criterion};
use distill_core::{
    build_transversal, BellDiagonalState, Objective, PermSet, ProtocolEvaluator,
};

fn bench_pushforward(c: &mut Criterion) {
    let t = build_transversal(3).expect("m=3 transversal");
    let eval = ProtocolEvaluator::new(&t);
    let w = BellDiagonalState::werner(0.72).unwrap();
    c.bench_function("pushforward_eval_m3_full_transversal", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for id in 0..eval.len() as u32 {
                acc += eval.table(id).unwrap().evaluate(&w).success_prob();
            }
            acc
        })
    });
}

fn bench_enumerate(c: &mut Criterion) {
    let t = build_transversal(3).expect("m=3 transversal");
    let eval = ProtocolEvaluator::new(&t);
    let w = BellDiagonalState::werner(0.64).unwrap();

    let mut group = c.benchmark_group("enumerate_best_m3_n2_keyrate");
    group.bench_function("sequential", |b| {
        b.iter(|| {
            eval.enumerate_best_seq(2, &w, Objective::Bb84Rate, PermSet::Full24)
                .unwrap()
                .value
        })
    });
    group.bench_function("parallel", |b| {
        b.iter(|| {
            eval.enumerate_best(2, &w, Objective::Bb84Rate, PermSet::Full24)
                .unwrap()
                .value
        })
    });
    group.finish();
}

fn bench_transversal_build(c: &mut Criterion) {
    c.bench_function("build_transversal_m3", |b| {
        b.iter(|| build_transversal(3).unwrap().len())
    });
}

criterion_group!(benches, bench_pushforward, bench_enumerate, bench_transversal_build);
criterion_main!(benches);
