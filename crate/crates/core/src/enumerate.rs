//! Reachable agent histories and deterministic agent policy enumeration.
//!
//! Enumeration works over *decision histories*: reachable agent histories
//! where at least two actions differ in reward, transition row, or
//! stickiness effect for some state the agent might be in. Where all
//! actions are interchangeable in that sense, policies play the first
//! action and no branching is enumerated; the induced game values are
//! unaffected because every subtree after interchangeable actions is
//! isomorphic.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Error;
use crate::model::{ActionId, AgentObs, PublicObs, Rpomdp, StateId};
use crate::policies::DeterministicAgentPolicy;
use crate::trajectories::AgentHistory;
use crate::uncertainty::Assignment;

/// A reachable agent history, the states it may occupy, and whether the
/// action choice there is a real decision.
#[derive(Debug, Clone)]
pub struct AgentNode {
    pub history: AgentHistory,
    pub support: BTreeSet<StateId>,
    pub is_decision: bool,
}

fn actions_equivalent(
    model: &Rpomdp,
    support: &BTreeSet<StateId>,
    a: ActionId,
    b: ActionId,
) -> bool {
    support.iter().all(|&s| {
        model.reward(s, a) == model.reward(s, b)
            && model
                .states()
                .all(|next| model.transition(s, a, next) == model.transition(s, b, next))
            && model
                .sticking_for_observed(model.nature_obs(s), model.public_obs(s), a)
                .expect("indices in range")
                == model
                    .sticking_for_observed(model.nature_obs(s), model.public_obs(s), b)
                    .expect("indices in range")
    })
}

fn possibly_positive_cached(
    model: &Rpomdp,
    vertices: &[Assignment],
    s: StateId,
    a: ActionId,
    next: StateId,
) -> bool {
    let expr = model.transition(s, a, next);
    if expr.is_constant() {
        return expr.constant_part() > &crate::num::q_int(0);
    }
    vertices.iter().any(|u| expr.eval(u) > crate::num::q_int(0))
}

/// All reachable agent nodes of depth `< horizon`, in breadth-first order.
pub fn agent_nodes(model: &Rpomdp, horizon: usize) -> Vec<AgentNode> {
    let vertices = model.uncertainty().vertices();
    let root = AgentNode {
        history: AgentHistory {
            initial: (
                model.agent_obs(model.initial_state()),
                model.public_obs(model.initial_state()),
            ),
            steps: Vec::new(),
        },
        support: std::iter::once(model.initial_state()).collect(),
        is_decision: false,
    };
    let mut out = Vec::new();
    let mut frontier = vec![root];
    for depth in 0..horizon {
        let mut next_frontier = Vec::new();
        for mut node in frontier {
            let first = ActionId(0);
            let equivalent = model
                .actions()
                .all(|a| actions_equivalent(model, &node.support, a, first));
            node.is_decision = !equivalent;
            let offered: Vec<ActionId> = if equivalent {
                vec![first]
            } else {
                model.actions().collect()
            };
            if depth + 1 < horizon {
                for &a in &offered {
                    let mut by_obs: BTreeMap<(AgentObs, PublicObs), BTreeSet<StateId>> =
                        BTreeMap::new();
                    for &s in &node.support {
                        for nxt in model.states() {
                            if possibly_positive_cached(model, &vertices, s, a, nxt) {
                                by_obs
                                    .entry((model.agent_obs(nxt), model.public_obs(nxt)))
                                    .or_default()
                                    .insert(nxt);
                            }
                        }
                    }
                    for (z, support) in by_obs {
                        let mut h = node.history.clone();
                        h.steps.push((a, z));
                        next_frontier.push(AgentNode {
                            history: h,
                            support,
                            is_decision: false,
                        });
                    }
                }
            }
            out.push(node);
        }
        frontier = next_frontier;
    }
    out
}

/// The reachable agent histories of depth `< horizon` where the action
/// choice matters.
pub fn agent_decision_histories(model: &Rpomdp, horizon: usize) -> Vec<AgentHistory> {
    agent_nodes(model, horizon)
        .into_iter()
        .filter(|n| n.is_decision)
        .map(|n| n.history)
        .collect()
}

/// How many deterministic agent policies enumeration would produce.
pub fn count_deterministic_agent_policies(model: &Rpomdp, horizon: usize) -> u128 {
    let decisions = agent_decision_histories(model, horizon).len() as u32;
    (model.n_actions() as u128).saturating_pow(decisions)
}

/// Exhaustively lists the deterministic agent policies over reachable
/// decision histories of length `< horizon`.
///
/// Errors with the computed count when it exceeds `cap`.
pub fn enumerate_deterministic_agent_policies(
    model: &Rpomdp,
    horizon: usize,
    cap: u128,
) -> Result<Vec<DeterministicAgentPolicy>, Error> {
    let decisions = agent_decision_histories(model, horizon);
    let count = (model.n_actions() as u128).saturating_pow(decisions.len() as u32);
    if count > cap {
        return Err(Error::Capacity { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let n_actions = model.n_actions();
    let mut choice = vec![0usize; decisions.len()];
    loop {
        let table: BTreeMap<AgentHistory, ActionId> = decisions
            .iter()
            .zip(&choice)
            .map(|(h, &c)| (h.clone(), ActionId(c)))
            .collect();
        out.push(DeterministicAgentPolicy::new(table));
        // Odometer over the choice vector.
        let mut i = 0;
        loop {
            if i == choice.len() {
                return Ok(out);
            }
            choice[i] += 1;
            if choice[i] < n_actions {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{
        build_benchmark, build_benchmark_variant, BenchmarkId, BenchmarkVariant,
    };

    #[test]
    fn single_action_model_has_one_policy() {
        let model = build_benchmark(BenchmarkId::Fig1RmdpU1).unwrap();
        let policies = enumerate_deterministic_agent_policies(&model, 3, 1024).unwrap();
        assert_eq!(policies.len(), 1);
    }

    #[test]
    fn order_model_has_one_decision_point_at_horizon_one() {
        let model = build_benchmark(BenchmarkId::AppD4Arect).unwrap();
        let policies = enumerate_deterministic_agent_policies(&model, 1, 1024).unwrap();
        assert_eq!(policies.len(), 2);
    }

    #[test]
    fn chain_model_decisions_sit_at_the_last_layer() {
        // Both depth-3 observation classes are decision points; everything
        // earlier is interchangeable, so 2^2 policies remain.
        let model = build_benchmark(BenchmarkId::Fig2Sticky).unwrap();
        let decisions = agent_decision_histories(&model, 4);
        assert_eq!(decisions.len(), 2);
        let policies = enumerate_deterministic_agent_policies(&model, 4, 1024).unwrap();
        assert_eq!(policies.len(), 4);
    }

    #[test]
    fn cap_is_enforced() {
        let model =
            build_benchmark_variant(BenchmarkId::Fig2Sticky, &BenchmarkVariant::default()).unwrap();
        let err = enumerate_deterministic_agent_policies(&model, 4, 2).unwrap_err();
        assert!(matches!(err, Error::Capacity { count: 4, cap: 2 }));
    }
}
