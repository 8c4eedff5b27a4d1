//! The tabulated optimal policy pairs must reproduce their exact values.

use rpomdp::benchmarks::{
    build_benchmark_variant, default_horizon, reference_pair, BenchmarkId, BenchmarkVariant,
    StickinessKind,
};
use rpomdp::model::PlayOrder;
use rpomdp::num::{q, q_int, Q};
use rpomdp::{policy_valid, value_fh};

fn check(id: BenchmarkId, variant: BenchmarkVariant, expected: Q) {
    let model = build_benchmark_variant(id, &variant).unwrap();
    let pair = reference_pair(id, &variant)
        .unwrap()
        .unwrap_or_else(|| panic!("{id}: missing reference pair"));
    assert_eq!(pair.value, expected, "{id}: wrong stored value");
    assert!(
        policy_valid(&model, &pair.nature),
        "{id}: reference nature policy invalid"
    );
    let value = value_fh(&model, &pair.agent, &pair.nature, default_horizon(id)).unwrap();
    assert_eq!(value, expected, "{id}: evaluation mismatch");
}

#[test]
fn chain_model_full_stickiness_value() {
    check(
        BenchmarkId::Fig2Sticky,
        BenchmarkVariant {
            stickiness: Some(StickinessKind::Full),
            play_order: None,
        },
        q(200, 3),
    );
}

#[test]
fn chain_model_zero_stickiness_value() {
    check(
        BenchmarkId::Fig2Sticky,
        BenchmarkVariant {
            stickiness: Some(StickinessKind::Zero),
            play_order: None,
        },
        q(131, 2),
    );
}

#[test]
fn order_small_agent_first_value() {
    check(
        BenchmarkId::Fig3OrderSmall,
        BenchmarkVariant {
            stickiness: None,
            play_order: Some(PlayOrder::AgentFirst),
        },
        q_int(30),
    );
}

#[test]
fn order_small_nature_first_value() {
    check(
        BenchmarkId::Fig3OrderSmall,
        BenchmarkVariant {
            stickiness: None,
            play_order: Some(PlayOrder::NatureFirst),
        },
        q_int(150),
    );
}

#[test]
fn arect_agent_first_value() {
    check(
        BenchmarkId::AppD4Arect,
        BenchmarkVariant {
            stickiness: None,
            play_order: Some(PlayOrder::AgentFirst),
        },
        q_int(40),
    );
}

#[test]
fn arect_nature_first_value() {
    check(
        BenchmarkId::AppD4Arect,
        BenchmarkVariant {
            stickiness: None,
            play_order: Some(PlayOrder::NatureFirst),
        },
        q(360, 7),
    );
}

#[test]
fn extended_chain_full_stickiness_value() {
    check(
        BenchmarkId::AppCObsSticky,
        BenchmarkVariant {
            stickiness: Some(StickinessKind::Full),
            play_order: None,
        },
        q(28871, 390),
    );
}

#[test]
fn extended_chain_observation_stickiness_value() {
    check(
        BenchmarkId::AppCObsSticky,
        BenchmarkVariant {
            stickiness: Some(StickinessKind::ObservationBased),
            play_order: None,
        },
        q(719, 10),
    );
}

#[test]
fn extended_chain_zero_stickiness_value() {
    check(
        BenchmarkId::AppCObsSticky,
        BenchmarkVariant {
            stickiness: Some(StickinessKind::Zero),
            play_order: None,
        },
        q(24655, 348),
    );
}
