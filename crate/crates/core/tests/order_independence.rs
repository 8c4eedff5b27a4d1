use rpomdp::benchmarks::*;
use rpomdp::model::PlayOrder;
use rpomdp::num::format_rational;
use rpomdp::solver::{solve_saddle, SolverConfig};

#[test]
fn chain_values_are_order_independent() {
    for kind in [StickinessKind::Full, StickinessKind::Zero] {
        let mut values = Vec::new();
        for order in [PlayOrder::AgentFirst, PlayOrder::NatureFirst] {
            let model = build_benchmark_variant(
                BenchmarkId::Fig2Sticky,
                &BenchmarkVariant {
                    stickiness: Some(kind),
                    play_order: Some(order),
                },
            )
            .unwrap();
            let r = solve_saddle(&model, 4, &SolverConfig::default()).unwrap();
            assert_eq!(r.gap, rpomdp::num::q_int(0), "{kind:?} {order}");
            values.push(r.lower_value);
        }
        assert_eq!(
            values[0],
            values[1],
            "{kind:?}: {} vs {}",
            format_rational(&values[0]),
            format_rational(&values[1])
        );
    }
}
