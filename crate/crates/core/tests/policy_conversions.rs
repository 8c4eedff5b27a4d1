//! Stochastic and mixed policies must induce identical path distributions
//! through the conversions, in both directions and for both players.

mod common;

use rpomdp::benchmarks::{build_benchmark, BenchmarkId};
use rpomdp::conversions::{
    agent_mixed_from_stochastic, agent_stochastic_from_mixed, mixed_from_stochastic,
    stochastic_from_mixed,
};
use rpomdp::num::{q, Q};
use rpomdp::policies::{
    AgentPolicy, Distribution, NatureKey, NaturePolicy, StochasticNaturePolicy,
};
use rpomdp::{path_distribution, policy_valid, NatureHistory};

#[test]
fn dirac_policy_becomes_a_dirac_mixture() {
    let model = build_benchmark(BenchmarkId::Fig3OrderSmall).unwrap();
    let theta = common::random_nature_policy(&model, 2, &mut common::rng(11), 0);
    assert!(theta.table.values().all(|d| d.len() == 1));
    let mixed = mixed_from_stochastic(&model, &theta, 2).unwrap();
    assert_eq!(mixed.len(), 1);
}

#[test]
fn one_binary_root_choice_gives_two_representatives() {
    let model = build_benchmark(BenchmarkId::Fig3OrderSmall).unwrap();
    // Randomize only at the root key; every later key stays a point mass.
    let root = NatureHistory {
        initial: (
            model.nature_obs(model.initial_state()),
            model.public_obs(model.initial_state()),
        ),
        steps: Vec::new(),
    };
    let vertices = model.uncertainty().vertices();
    let mut base = common::random_nature_policy(&model, 2, &mut common::rng(12), 0);
    let a0 = rpomdp::model::ActionId(0);
    base.table.insert(
        NatureKey::for_mode(base.mode, root, a0),
        Distribution::new(vec![
            (vertices[0].clone(), q(1, 2)),
            (vertices[1].clone(), q(1, 2)),
        ])
        .unwrap(),
    );
    let mixed = mixed_from_stochastic(&model, &base, 2).unwrap();
    assert_eq!(mixed.len(), 2);
    for (_, w) in mixed.support() {
        assert_eq!(*w, q(1, 2));
    }
}

#[test]
fn nature_conversions_preserve_path_distributions() {
    let mut rng = common::rng(0xc0de);
    for (name, model) in common::suite_models() {
        for trial in 0..4usize {
            let k = 1 + (trial % 3);
            let pi = common::random_agent_policy(&model, k, &mut rng);
            let theta = common::random_nature_policy(&model, k, &mut rng, 2);
            assert!(policy_valid(
                &model,
                &NaturePolicy::Stochastic(theta.clone())
            ));

            let mixed = mixed_from_stochastic(&model, &theta, k).unwrap();
            assert!(policy_valid(&model, &NaturePolicy::Mixed(mixed.clone())));
            let weight_sum: Q = mixed.support().map(|(_, w)| w.clone()).sum();
            assert_eq!(weight_sum, q(1, 1));

            for pi_side in [
                AgentPolicy::Stochastic(pi.clone()),
                AgentPolicy::Mixed(agent_mixed_from_stochastic(&model, &pi, k).unwrap()),
            ] {
                let direct = path_distribution(
                    &model,
                    &pi_side,
                    &NaturePolicy::Stochastic(theta.clone()),
                    k,
                )
                .unwrap();
                let via_mixed =
                    path_distribution(&model, &pi_side, &NaturePolicy::Mixed(mixed.clone()), k)
                        .unwrap();
                assert_eq!(direct, via_mixed, "{name} horizon {k} (to mixed)");

                let back = stochastic_from_mixed(&model, &mixed, k).unwrap();
                let via_back =
                    path_distribution(&model, &pi_side, &NaturePolicy::Stochastic(back.clone()), k)
                        .unwrap();
                assert_eq!(direct, via_back, "{name} horizon {k} (round trip)");
            }
        }
    }
}

#[test]
fn agent_conversions_preserve_path_distributions() {
    let mut rng = common::rng(0xfeed);
    for (name, model) in common::suite_models() {
        for trial in 0..3usize {
            let k = 1 + (trial % 3);
            let pi = common::random_agent_policy(&model, k, &mut rng);
            let theta = common::random_nature_policy(&model, k, &mut rng, 1);

            let mixed = agent_mixed_from_stochastic(&model, &pi, k).unwrap();
            let direct = path_distribution(
                &model,
                &AgentPolicy::Stochastic(pi.clone()),
                &NaturePolicy::Stochastic(theta.clone()),
                k,
            )
            .unwrap();
            let via_mixed = path_distribution(
                &model,
                &AgentPolicy::Mixed(mixed.clone()),
                &NaturePolicy::Stochastic(theta.clone()),
                k,
            )
            .unwrap();
            assert_eq!(direct, via_mixed, "{name} horizon {k} (agent to mixed)");

            let back = agent_stochastic_from_mixed(&model, &mixed, k).unwrap();
            let via_back = path_distribution(
                &model,
                &AgentPolicy::Stochastic(back),
                &NaturePolicy::Stochastic(theta.clone()),
                k,
            )
            .unwrap();
            assert_eq!(direct, via_back, "{name} horizon {k} (agent round trip)");
        }
    }
}

#[test]
fn unreachable_differences_collapse_to_dirac() {
    // Two deterministic policies differing only at an unreachable history
    // induce a mixture whose stochastic form is a point mass at every
    // reachable key.
    let model = build_benchmark(BenchmarkId::Fig3OrderSmall).unwrap();
    let det = common::random_nature_policy(&model, 2, &mut common::rng(21), 0);
    let mixed = mixed_from_stochastic(&model, &det, 2).unwrap();
    let back: StochasticNaturePolicy = stochastic_from_mixed(&model, &mixed, 2).unwrap();
    for dist in back.table.values() {
        assert_eq!(dist.len(), 1);
    }
}

#[test]
fn mass_sums_to_one_for_valid_pairs() {
    let mut rng = common::rng(0xabcd);
    for (name, model) in common::suite_models() {
        let pi = common::random_agent_policy(&model, 3, &mut rng);
        let theta = common::random_nature_policy(&model, 3, &mut rng, 2);
        let dist = path_distribution(
            &model,
            &AgentPolicy::Stochastic(pi),
            &NaturePolicy::Stochastic(theta),
            3,
        )
        .unwrap();
        assert_eq!(dist.total_mass(), q(1, 1), "{name}");
    }
}

#[test]
fn tabulated_root_mixture_round_trips() {
    // The extended chain's full-stickiness optimum randomizes over three
    // vertex assignments at the root; converting to a mixture and back
    // keeps the induced path distribution identical.
    use rpomdp::benchmarks::{reference_pair, BenchmarkVariant, StickinessKind};
    let variant = BenchmarkVariant {
        stickiness: Some(StickinessKind::Full),
        play_order: None,
    };
    let model =
        rpomdp::benchmarks::build_benchmark_variant(BenchmarkId::AppCObsSticky, &variant).unwrap();
    let pair = reference_pair(BenchmarkId::AppCObsSticky, &variant)
        .unwrap()
        .unwrap();
    let theta = match &pair.nature {
        NaturePolicy::Stochastic(t) => t.clone(),
        _ => unreachable!(),
    };
    let k = 5;
    let mixed = mixed_from_stochastic(&model, &theta, k).unwrap();
    assert_eq!(mixed.len(), 3);
    let weights: Vec<Q> = mixed.support().map(|(_, w)| w.clone()).collect();
    assert!(weights.contains(&q(17, 24)));
    assert!(weights.contains(&q(3, 104)));
    assert!(weights.contains(&q(41, 156)));
    let back = stochastic_from_mixed(&model, &mixed, k).unwrap();
    let d1 = path_distribution(&model, &pair.agent, &pair.nature, k).unwrap();
    let d2 = path_distribution(&model, &pair.agent, &NaturePolicy::Mixed(mixed), k).unwrap();
    let d3 = path_distribution(&model, &pair.agent, &NaturePolicy::Stochastic(back), k).unwrap();
    assert_eq!(d1, d2);
    assert_eq!(d1, d3);
}
