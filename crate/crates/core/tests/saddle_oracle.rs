//! Independent saddle checks. For models whose nature decisions happen at
//! one layer, the exact saddle value can be computed without the solver:
//! enumerate nature's vertex-choice tables alongside the agent's policies
//! and solve that finite matrix game directly.

mod common;

use rpomdp::benchmarks::{
    build_benchmark_variant, nature_policy_from_obs_patterns, BenchmarkId, BenchmarkVariant,
};
use rpomdp::enumerate::enumerate_deterministic_agent_policies;
use rpomdp::matrix_game::solve_matrix_game;
use rpomdp::model::{ActionId, PlayOrder, PublicObs};
use rpomdp::num::{q, q_int, Q};
use rpomdp::policies::{AgentPolicy, Distribution, NaturePolicy};
use rpomdp::solver::{solve_saddle, SolverConfig};
use rpomdp::value_fh;
use rpomdp::Assignment;

/// Brute-force saddle value: agent policies by enumeration, nature tables
/// over all vertex combinations at the given root patterns.
fn brute_force_value(
    model: &rpomdp::Rpomdp,
    horizon: usize,
    nature_tables: Vec<rpomdp::StochasticNaturePolicy>,
) -> Q {
    let agents = enumerate_deterministic_agent_policies(model, horizon, 1 << 20).unwrap();
    let mut payoff = Vec::new();
    for pi in &agents {
        let mut row = Vec::new();
        for theta in &nature_tables {
            row.push(
                value_fh(
                    model,
                    &AgentPolicy::Deterministic(pi.clone()),
                    &NaturePolicy::Stochastic(theta.clone()),
                    horizon,
                )
                .unwrap(),
            );
        }
        payoff.push(row);
    }
    solve_matrix_game(&payoff).unwrap().value
}

#[test]
fn order_model_agent_first_matches_brute_force() {
    let variant = BenchmarkVariant {
        stickiness: None,
        play_order: Some(PlayOrder::AgentFirst),
    };
    let model = build_benchmark_variant(BenchmarkId::Fig3OrderSmall, &variant).unwrap();
    let w = PublicObs(0);
    let vertices = model.uncertainty().vertices();
    // Nature commits per observed action: every vertex pair is a table.
    let mut tables = Vec::new();
    for ua in &vertices {
        for ub in &vertices {
            tables.push(
                nature_policy_from_obs_patterns(
                    &model,
                    2,
                    &[
                        (vec![w], Some(ActionId(0)), Distribution::dirac(ua.clone())),
                        (vec![w], Some(ActionId(1)), Distribution::dirac(ub.clone())),
                    ],
                )
                .unwrap(),
            );
        }
    }
    assert_eq!(tables.len(), 4);
    let oracle = brute_force_value(&model, 2, tables);
    assert_eq!(oracle, q_int(30));
    let solved = solve_saddle(&model, 2, &SolverConfig::default()).unwrap();
    assert_eq!(solved.lower_value, oracle);
    assert_eq!(solved.upper_value, oracle);
}

#[test]
fn rectangular_model_nature_first_matches_brute_force() {
    let variant = BenchmarkVariant {
        stickiness: None,
        play_order: Some(PlayOrder::NatureFirst),
    };
    let model = build_benchmark_variant(BenchmarkId::AppD4Arect, &variant).unwrap();
    let w = PublicObs(0);
    // Full stickiness and nature first: the root choice is the whole policy.
    let tables: Vec<_> = model
        .uncertainty()
        .vertices()
        .into_iter()
        .map(|u| {
            nature_policy_from_obs_patterns(&model, 3, &[(vec![w], None, Distribution::dirac(u))])
                .unwrap()
        })
        .collect();
    assert_eq!(tables.len(), 4);
    let oracle = brute_force_value(&model, 3, tables);
    assert_eq!(oracle, q(360, 7));
    let solved = solve_saddle(&model, 3, &SolverConfig::default()).unwrap();
    assert_eq!(solved.lower_value, oracle);
    assert_eq!(solved.upper_value, oracle);
}

#[test]
fn chain_full_stickiness_matches_brute_force() {
    let variant = BenchmarkVariant {
        stickiness: Some(rpomdp::benchmarks::StickinessKind::Full),
        play_order: None,
    };
    let model = build_benchmark_variant(BenchmarkId::Fig2Sticky, &variant).unwrap();
    let w = PublicObs(0);
    let tables: Vec<_> = model
        .uncertainty()
        .vertices()
        .into_iter()
        .map(|u: Assignment| {
            nature_policy_from_obs_patterns(&model, 4, &[(vec![w], None, Distribution::dirac(u))])
                .unwrap()
        })
        .collect();
    let oracle = brute_force_value(&model, 4, tables);
    assert_eq!(oracle, q(200, 3));
}
