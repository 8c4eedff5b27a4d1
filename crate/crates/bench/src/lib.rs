//! Benchmark fixtures shared by the criterion targets.

use rpomdp::benchmarks::{build_benchmark_variant, BenchmarkId, BenchmarkVariant, StickinessKind};
use rpomdp::model::PlayOrder;
use rpomdp::Rpomdp;

pub fn chain_full() -> Rpomdp {
    build_benchmark_variant(
        BenchmarkId::Fig2Sticky,
        &BenchmarkVariant {
            stickiness: Some(StickinessKind::Full),
            play_order: None,
        },
    )
    .unwrap()
}

pub fn chain_zero() -> Rpomdp {
    build_benchmark_variant(
        BenchmarkId::Fig2Sticky,
        &BenchmarkVariant {
            stickiness: Some(StickinessKind::Zero),
            play_order: None,
        },
    )
    .unwrap()
}

pub fn order_small(order: PlayOrder) -> Rpomdp {
    build_benchmark_variant(
        BenchmarkId::Fig3OrderSmall,
        &BenchmarkVariant {
            stickiness: None,
            play_order: Some(order),
        },
    )
    .unwrap()
}

pub fn extended_chain(kind: StickinessKind) -> Rpomdp {
    build_benchmark_variant(
        BenchmarkId::AppCObsSticky,
        &BenchmarkVariant {
            stickiness: Some(kind),
            play_order: None,
        },
    )
    .unwrap()
}
