use criterion::{criterion_group, criterion_main, Criterion};

use rpomdp::benchmarks::{reference_pair, BenchmarkId, BenchmarkVariant, StickinessKind};
use rpomdp::policies::{AgentPolicy, NaturePolicy};
use rpomdp::{expected_reward, occupancy_init, occupancy_next, value_fh};
use rpomdp_bench::extended_chain;

fn value_enumeration(c: &mut Criterion) {
    let variant = BenchmarkVariant {
        stickiness: Some(StickinessKind::Zero),
        play_order: None,
    };
    let model = extended_chain(StickinessKind::Zero);
    let pair = reference_pair(BenchmarkId::AppCObsSticky, &variant)
        .unwrap()
        .unwrap();
    c.bench_function("value_fh_extended_chain_k5", |b| {
        b.iter(|| value_fh(&model, &pair.agent, &pair.nature, 5).unwrap())
    });
}

fn occupancy_recursion(c: &mut Criterion) {
    let variant = BenchmarkVariant {
        stickiness: Some(StickinessKind::Zero),
        play_order: None,
    };
    let model = extended_chain(StickinessKind::Zero);
    let pair = reference_pair(BenchmarkId::AppCObsSticky, &variant)
        .unwrap()
        .unwrap();
    let (pi, theta) = match (&pair.agent, &pair.nature) {
        (AgentPolicy::Stochastic(p), NaturePolicy::Stochastic(t)) => (p.clone(), t.clone()),
        _ => unreachable!(),
    };
    c.bench_function("occupancy_recursion_extended_chain_k4", |b| {
        b.iter(|| {
            let mut occ = occupancy_init(&model);
            let mut total = rpomdp::num::q_int(0);
            for _ in 0..4 {
                total += expected_reward(&model, &occ, &pi).unwrap();
                occ = occupancy_next(&model, &occ, &pi, &theta).unwrap();
            }
            total
        })
    });
}

criterion_group!(benches, value_enumeration, occupancy_recursion);
criterion_main!(benches);
