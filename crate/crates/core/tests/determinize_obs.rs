//! Rewriting joint transition-observation templates into deterministic
//! per-state observations, checked against direct joint enumeration.

mod common;

use std::collections::BTreeMap;

use rpomdp::determinize::{determinize_observations, ObsTarget, UncertainObsModel};
use rpomdp::model::{ActionId, AgentObs, NatureObs, PlayOrder, PublicObs, StateId, Stickiness};
use rpomdp::num::{q, q_int, Q};
use rpomdp::policies::{AgentPolicy, NaturePolicy};
use rpomdp::uncertainty::{AffineExpr, Assignment, UncertaintySet, VariableId};
use rpomdp::value_fh;

fn base_uncertainty() -> UncertaintySet {
    UncertaintySet::new(vec!["p".into()], vec![(q(1, 10), q(9, 10))], vec![]).unwrap()
}

/// A two-state raw model whose observation part is already a point mass
/// per successor state.
fn dirac_raw() -> UncertainObsModel {
    let p = VariableId(0);
    let t = |s: usize, za: usize, zn: usize, zp: usize, prob: AffineExpr| ObsTarget {
        state: StateId(s),
        agent: AgentObs(za),
        nature: NatureObs(zn),
        public: PublicObs(zp),
        prob,
    };
    UncertainObsModel {
        states: vec!["s1".into(), "s2".into()],
        actions: vec!["a".into()],
        agent_obs_labels: vec!["za".into()],
        nature_obs_labels: vec!["zn".into()],
        public_obs_labels: vec!["o1".into(), "o2".into()],
        initial: (StateId(0), AgentObs(0), NatureObs(0), PublicObs(0)),
        rewards: vec![vec![q_int(5)], vec![q_int(0)]],
        template: vec![
            vec![vec![
                t(1, 0, 0, 1, AffineExpr::var(p)),
                t(0, 0, 0, 0, AffineExpr::new(q_int(1), vec![(p, q_int(-1))])),
            ]],
            vec![vec![t(0, 0, 0, 0, AffineExpr::one())]],
        ],
        uncertainty: base_uncertainty(),
        stickiness: Stickiness::Zero,
        play_order: PlayOrder::AgentFirst,
    }
}

/// A raw model where one successor state emits two equally likely agent
/// observations.
fn split_raw() -> UncertainObsModel {
    let p = VariableId(0);
    let t = |s: usize, za: usize, prob: AffineExpr| ObsTarget {
        state: StateId(s),
        agent: AgentObs(za),
        nature: NatureObs(0),
        public: PublicObs(0),
        prob,
    };
    UncertainObsModel {
        states: vec!["s1".into(), "s2".into()],
        actions: vec!["a".into()],
        agent_obs_labels: vec!["za1".into(), "za2".into()],
        nature_obs_labels: vec!["zn".into()],
        public_obs_labels: vec!["o".into()],
        initial: (StateId(0), AgentObs(0), NatureObs(0), PublicObs(0)),
        rewards: vec![vec![q_int(0)], vec![q_int(7)]],
        template: vec![
            vec![vec![
                t(1, 0, AffineExpr::term(q(1, 2), p)),
                t(1, 1, AffineExpr::term(q(1, 2), p)),
                t(0, 0, AffineExpr::new(q_int(1), vec![(p, q_int(-1))])),
            ]],
            vec![vec![t(1, 0, AffineExpr::one())]],
        ],
        uncertainty: base_uncertainty(),
        stickiness: Stickiness::Zero,
        play_order: PlayOrder::AgentFirst,
    }
}

#[test]
fn dirac_observations_keep_one_product_state_per_state() {
    let raw = dirac_raw();
    let model = determinize_observations(&raw).unwrap();
    assert_eq!(model.n_states(), raw.states.len());
    assert!(model.validate().is_valid());
}

#[test]
fn split_observations_halve_the_mass() {
    let raw = split_raw();
    let model = determinize_observations(&raw).unwrap();
    assert!(model.validate().is_valid());
    // The two product states for the split successor each carry p/2.
    let s1 = model
        .states()
        .find(|s| model.state_name(*s).starts_with("s1."))
        .unwrap();
    let mut halves = 0;
    let u = Assignment::new(vec![q(3, 10)]);
    for next in model.states() {
        let value = model.transition(s1, ActionId(0), next).eval(&u);
        if value == q(3, 20) {
            halves += 1;
        }
    }
    assert_eq!(halves, 2);
}

/// Direct joint enumeration on a raw model: paths carry both the successor
/// state and the sampled observation tuple, policies read the same
/// histories as in the rewritten model.
fn raw_value_by_joint_enumeration(
    raw: &UncertainObsModel,
    rewritten: &rpomdp::Rpomdp,
    pi: &rpomdp::StochasticAgentPolicy,
    theta: &rpomdp::StochasticNaturePolicy,
    horizon: usize,
) -> Q {
    struct Node {
        state: StateId,
        h_a: rpomdp::AgentHistory,
        h_n: rpomdp::NatureHistory,
        prob: Q,
        reward: Q,
    }
    let mut total = Q::from_integer(0.into());
    let mut stack = vec![Node {
        state: raw.initial.0,
        h_a: rpomdp::AgentHistory {
            initial: (raw.initial.1, raw.initial.3),
            steps: Vec::new(),
        },
        h_n: rpomdp::NatureHistory {
            initial: (raw.initial.2, raw.initial.3),
            steps: Vec::new(),
        },
        prob: Q::from_integer(1.into()),
        reward: Q::from_integer(0.into()),
    }];
    let mut depth = 0;
    while depth < horizon {
        let mut next_nodes = Vec::new();
        for node in &stack {
            for (a, pa) in pi.dist_at(rewritten, &node.h_a).iter() {
                let reward = &node.reward + &raw.rewards[node.state.0][a.0];
                for (u, pu) in theta.dist_at(rewritten, &node.h_n, *a).unwrap().iter() {
                    for target in &raw.template[node.state.0][a.0] {
                        let pt = target.prob.eval(u);
                        if pt <= Q::from_integer(0.into()) {
                            continue;
                        }
                        let mut h_a = node.h_a.clone();
                        h_a.steps.push((*a, (target.agent, target.public)));
                        let mut h_n = node.h_n.clone();
                        h_n.steps
                            .push((*a, u.clone(), (target.nature, target.public)));
                        next_nodes.push(Node {
                            state: target.state,
                            h_a,
                            h_n,
                            prob: &node.prob * pa * pu * &pt,
                            reward: reward.clone(),
                        });
                    }
                }
            }
        }
        stack = next_nodes;
        depth += 1;
    }
    for node in stack {
        total += node.prob * node.reward;
    }
    total
}

#[test]
fn rewritten_values_match_joint_enumeration() {
    for raw in [dirac_raw(), split_raw()] {
        let model = determinize_observations(&raw).unwrap();
        let mut rng = common::rng(0xde7e);
        for k in 0..=3usize {
            for _ in 0..3 {
                let pi = common::random_agent_policy(&model, k, &mut rng);
                let theta = common::random_nature_policy(&model, k, &mut rng, 1);
                let direct = raw_value_by_joint_enumeration(&raw, &model, &pi, &theta, k);
                let via_rewrite = value_fh(
                    &model,
                    &AgentPolicy::Stochastic(pi),
                    &NaturePolicy::Stochastic(theta),
                    k,
                )
                .unwrap();
                assert_eq!(direct, via_rewrite, "horizon {k}");
            }
        }
    }
}

#[test]
fn malformed_template_is_rejected() {
    let mut raw = dirac_raw();
    // Remove a branch: the row no longer sums to one.
    raw.template[0][0].pop();
    assert!(determinize_observations(&raw).is_err());
    let mut raw2 = dirac_raw();
    raw2.template[0][0][0].prob = AffineExpr::term(q_int(2), VariableId(0));
    assert!(determinize_observations(&raw2).is_err());
}

#[test]
fn lifted_influence_follows_the_base_state() {
    let mut raw = dirac_raw();
    let mut influence = BTreeMap::new();
    influence.insert(
        VariableId(0),
        std::iter::once((StateId(0), ActionId(0))).collect(),
    );
    raw.stickiness = Stickiness::ObservationBased { influence };
    let model = determinize_observations(&raw).unwrap();
    let p = VariableId(0);
    for s in model.states() {
        let expected = model.state_name(s).starts_with("s1.");
        let sticks = model
            .stick(p, model.nature_obs(s), model.public_obs(s), ActionId(0))
            .unwrap();
        assert_eq!(sticks, expected, "{}", model.state_name(s));
    }
}
