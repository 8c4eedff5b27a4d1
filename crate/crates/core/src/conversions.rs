//! Conversions between stochastic and mixed policies.
//!
//! Both directions preserve the induced path distribution at the working
//! horizon exactly. The stochastic-to-mixed direction builds one
//! deterministic representative per combination of supported choices over
//! the policy's relevant histories, weighted by the product of the
//! stochastic probabilities. The mixed-to-stochastic direction conditions,
//! at each relevant history, on the deterministic policies able to reach
//! it; histories none of them reaches keep the unconditional mixture
//! through the returned policy's fallback.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::error::Error;
use crate::model::Rpomdp;
use crate::num::Q;
use crate::policies::{
    DeterministicAgentPolicy, DeterministicNaturePolicy, Distribution, MixedAgentPolicy,
    MixedNaturePolicy, NatureFallback, NatureKey, StochasticAgentPolicy, StochasticNaturePolicy,
};
use crate::trajectories::{extend_supported, initial_supported, AgentHistory, NatureHistory};
use crate::uncertainty::Assignment;

const PRODUCT_CAP: u128 = 1 << 16;

/// The relevant nature keys of a stochastic policy up to `horizon`, with
/// their supported choice distributions, in deterministic order.
fn relevant_nature_keys(
    model: &Rpomdp,
    theta: &StochasticNaturePolicy,
    horizon: usize,
) -> Result<BTreeMap<NatureKey, Distribution<Assignment>>, Error> {
    let mut keys: BTreeMap<NatureKey, Distribution<Assignment>> = BTreeMap::new();
    let mut frontier = vec![initial_supported(model)];
    for _ in 0..horizon {
        let mut next_frontier = Vec::new();
        for node in &frontier {
            let h_n = node.history.nature_part();
            for a in model.actions() {
                let dist = theta.dist_at(model, &h_n, a)?;
                keys.entry(theta.key(&h_n, a))
                    .or_insert_with(|| dist.clone());
                for (u, _) in dist.iter() {
                    if !u.agrees(&node.fixed) || !model.uncertainty().contains(u) {
                        return Err(Error::Contract(
                            "policy supports a choice outside the admissible set".into(),
                        ));
                    }
                    next_frontier.extend(extend_supported(model, node, a, u));
                }
            }
        }
        next_frontier.sort_by(|x, y| x.history.cmp(&y.history));
        next_frontier.dedup_by(|x, y| x.history == y.history && x.support == y.support);
        frontier = next_frontier;
    }
    Ok(keys)
}

/// Builds the path-distribution-equivalent mixed policy of a stochastic
/// nature policy: one deterministic representative per combination of
/// supported choices over the relevant keys, weighted by the product of
/// the per-key probabilities.
pub fn mixed_from_stochastic(
    model: &Rpomdp,
    theta: &StochasticNaturePolicy,
    horizon: usize,
) -> Result<MixedNaturePolicy, Error> {
    let keys = relevant_nature_keys(model, theta, horizon)?;
    let entries: Vec<(NatureKey, Distribution<Assignment>)> = keys.into_iter().collect();
    let mut count: u128 = 1;
    for (_, d) in &entries {
        count = count.saturating_mul(d.len() as u128);
        if count > PRODUCT_CAP {
            return Err(Error::Capacity {
                count,
                cap: PRODUCT_CAP,
            });
        }
    }
    let mut support: Vec<(DeterministicNaturePolicy, Q)> = Vec::with_capacity(count as usize);
    let mut choice = vec![0usize; entries.len()];
    loop {
        let mut table = BTreeMap::new();
        let mut weight = Q::one();
        for ((key, dist), &c) in entries.iter().zip(&choice) {
            let (u, p) = dist.iter().nth(c).expect("choice index in range");
            table.insert(key.clone(), u.clone());
            weight *= p;
        }
        support.push((DeterministicNaturePolicy::new(theta.mode, table), weight));
        let mut i = 0;
        loop {
            if i == choice.len() {
                return Ok(MixedNaturePolicy::new(Distribution::new(support)?));
            }
            choice[i] += 1;
            if choice[i] < entries[i].1.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// The nature histories (up to length `horizon`) a deterministic policy
/// can reach by following its own choices.
fn reachable_nature_histories(
    model: &Rpomdp,
    det: &DeterministicNaturePolicy,
    horizon: usize,
) -> Result<BTreeSet<NatureHistory>, Error> {
    let mut out = BTreeSet::new();
    let mut frontier = vec![initial_supported(model)];
    out.insert(frontier[0].history.nature_part());
    for _ in 0..horizon {
        let mut next_frontier = Vec::new();
        for node in &frontier {
            let h_n = node.history.nature_part();
            for a in model.actions() {
                let u = det.choice_at(model, &h_n, a)?;
                if !u.agrees(&node.fixed) || !model.uncertainty().contains(&u) {
                    return Err(Error::Contract(
                        "policy supports a choice outside the admissible set".into(),
                    ));
                }
                next_frontier.extend(extend_supported(model, node, a, &u));
            }
        }
        next_frontier.sort_by(|x, y| x.history.cmp(&y.history));
        next_frontier.dedup_by(|x, y| x.history == y.history && x.support == y.support);
        for node in &next_frontier {
            out.insert(node.history.nature_part());
        }
        frontier = next_frontier;
    }
    Ok(out)
}

/// Builds the path-distribution-equivalent stochastic policy of a mixed
/// nature policy: on histories some supported deterministic policy reaches,
/// the conditional mixture of their choices; elsewhere the unconditional
/// mixture, provided by the returned policy's fallback.
pub fn stochastic_from_mixed(
    model: &Rpomdp,
    mix: &MixedNaturePolicy,
    horizon: usize,
) -> Result<StochasticNaturePolicy, Error> {
    let support: Vec<(DeterministicNaturePolicy, Q)> = mix.support().cloned().collect();
    let mode = support
        .first()
        .map(|(det, _)| det.mode)
        .unwrap_or(model.play_order());
    let mut reach: Vec<BTreeSet<NatureHistory>> = Vec::with_capacity(support.len());
    for (det, _) in &support {
        reach.push(reachable_nature_histories(model, det, horizon)?);
    }
    let mut all: BTreeSet<NatureHistory> = BTreeSet::new();
    for r in &reach {
        all.extend(r.iter().cloned());
    }
    let mut table: BTreeMap<NatureKey, Distribution<Assignment>> = BTreeMap::new();
    for h in &all {
        if h.len() >= horizon {
            continue;
        }
        let denom: Q = support
            .iter()
            .zip(&reach)
            .filter(|(_, r)| r.contains(h))
            .fold(Q::zero(), |acc, ((_, w), _)| acc + w);
        debug_assert!(!denom.is_zero());
        for a in model.actions() {
            let mut entries: Vec<(Assignment, Q)> = Vec::new();
            for ((det, w), r) in support.iter().zip(&reach) {
                if !r.contains(h) {
                    continue;
                }
                entries.push((det.choice_at(model, h, a)?, w / &denom));
            }
            let key = NatureKey::for_mode(mode, h.clone(), a);
            table.insert(key, Distribution::new(entries)?);
        }
    }
    Ok(StochasticNaturePolicy {
        mode,
        table,
        fallback: NatureFallback::Mixture(support),
    })
}

/// Relevant agent histories of a stochastic agent policy up to `horizon`,
/// with the action distribution used at each.
fn relevant_agent_histories(
    model: &Rpomdp,
    pi: &StochasticAgentPolicy,
    horizon: usize,
) -> BTreeMap<AgentHistory, Distribution<crate::model::ActionId>> {
    let vertices = model.uncertainty().vertices();
    let mut out = BTreeMap::new();
    let mut frontier: Vec<(AgentHistory, BTreeSet<crate::model::StateId>)> = vec![(
        AgentHistory {
            initial: (
                model.agent_obs(model.initial_state()),
                model.public_obs(model.initial_state()),
            ),
            steps: Vec::new(),
        },
        std::iter::once(model.initial_state()).collect(),
    )];
    for _ in 0..horizon {
        let mut next_frontier: Vec<(AgentHistory, BTreeSet<crate::model::StateId>)> = Vec::new();
        for (h, support) in &frontier {
            let dist = pi.dist_at(model, h);
            out.entry(h.clone()).or_insert_with(|| dist.clone());
            for (a, _) in dist.iter() {
                let mut by_obs: BTreeMap<_, BTreeSet<crate::model::StateId>> = BTreeMap::new();
                for &s in support {
                    for nxt in model.states() {
                        let expr = model.transition(s, *a, nxt);
                        let reachable = if expr.is_constant() {
                            expr.constant_part() > &Q::zero()
                        } else {
                            vertices.iter().any(|u| expr.eval(u) > Q::zero())
                        };
                        if reachable {
                            by_obs
                                .entry((model.agent_obs(nxt), model.public_obs(nxt)))
                                .or_default()
                                .insert(nxt);
                        }
                    }
                }
                for (z, sup) in by_obs {
                    let mut h2 = h.clone();
                    h2.steps.push((*a, z));
                    next_frontier.push((h2, sup));
                }
            }
        }
        next_frontier.sort_by(|x, y| x.0.cmp(&y.0));
        next_frontier.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
        frontier = next_frontier;
    }
    out
}

/// Agent-side analogue of [`mixed_from_stochastic`].
pub fn agent_mixed_from_stochastic(
    model: &Rpomdp,
    pi: &StochasticAgentPolicy,
    horizon: usize,
) -> Result<MixedAgentPolicy, Error> {
    let entries: Vec<(AgentHistory, Distribution<crate::model::ActionId>)> =
        relevant_agent_histories(model, pi, horizon)
            .into_iter()
            .collect();
    let mut count: u128 = 1;
    for (_, d) in &entries {
        count = count.saturating_mul(d.len() as u128);
        if count > PRODUCT_CAP {
            return Err(Error::Capacity {
                count,
                cap: PRODUCT_CAP,
            });
        }
    }
    let mut support: Vec<(DeterministicAgentPolicy, Q)> = Vec::with_capacity(count as usize);
    let mut choice = vec![0usize; entries.len()];
    loop {
        let mut table = BTreeMap::new();
        let mut weight = Q::one();
        for ((h, dist), &c) in entries.iter().zip(&choice) {
            let (a, p) = dist.iter().nth(c).expect("choice index in range");
            table.insert(h.clone(), *a);
            weight *= p;
        }
        support.push((DeterministicAgentPolicy::new(table), weight));
        let mut i = 0;
        loop {
            if i == choice.len() {
                return Ok(MixedAgentPolicy::new(Distribution::new(support)?));
            }
            choice[i] += 1;
            if choice[i] < entries[i].1.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// The agent histories (up to length `horizon`) a deterministic agent
/// policy can reach by following its own actions.
fn reachable_agent_histories(
    model: &Rpomdp,
    det: &DeterministicAgentPolicy,
    horizon: usize,
) -> BTreeSet<AgentHistory> {
    let vertices = model.uncertainty().vertices();
    let mut out = BTreeSet::new();
    let mut frontier: Vec<(AgentHistory, BTreeSet<crate::model::StateId>)> = vec![(
        AgentHistory {
            initial: (
                model.agent_obs(model.initial_state()),
                model.public_obs(model.initial_state()),
            ),
            steps: Vec::new(),
        },
        std::iter::once(model.initial_state()).collect(),
    )];
    out.insert(frontier[0].0.clone());
    for _ in 0..horizon {
        let mut next_frontier: Vec<(AgentHistory, BTreeSet<crate::model::StateId>)> = Vec::new();
        for (h, support) in &frontier {
            let a = det.action_at(model, h);
            let mut by_obs: BTreeMap<_, BTreeSet<crate::model::StateId>> = BTreeMap::new();
            for &s in support {
                for nxt in model.states() {
                    let expr = model.transition(s, a, nxt);
                    let reachable = if expr.is_constant() {
                        expr.constant_part() > &Q::zero()
                    } else {
                        vertices.iter().any(|u| expr.eval(u) > Q::zero())
                    };
                    if reachable {
                        by_obs
                            .entry((model.agent_obs(nxt), model.public_obs(nxt)))
                            .or_default()
                            .insert(nxt);
                    }
                }
            }
            for (z, sup) in by_obs {
                let mut h2 = h.clone();
                h2.steps.push((a, z));
                out.insert(h2.clone());
                next_frontier.push((h2, sup));
            }
        }
        next_frontier.sort_by(|x, y| x.0.cmp(&y.0));
        next_frontier.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
        frontier = next_frontier;
    }
    out
}

/// Agent-side analogue of [`stochastic_from_mixed`]. Unreached histories
/// keep the default first-action fallback.
pub fn agent_stochastic_from_mixed(
    model: &Rpomdp,
    mix: &MixedAgentPolicy,
    horizon: usize,
) -> Result<StochasticAgentPolicy, Error> {
    let support: Vec<(DeterministicAgentPolicy, Q)> = mix.support().cloned().collect();
    let mut reach: Vec<BTreeSet<AgentHistory>> = Vec::with_capacity(support.len());
    for (det, _) in &support {
        reach.push(reachable_agent_histories(model, det, horizon));
    }
    let mut all: BTreeSet<AgentHistory> = BTreeSet::new();
    for r in &reach {
        all.extend(r.iter().cloned());
    }
    let mut table = BTreeMap::new();
    for h in &all {
        if h.len() >= horizon {
            continue;
        }
        let denom: Q = support
            .iter()
            .zip(&reach)
            .filter(|(_, r)| r.contains(h))
            .fold(Q::zero(), |acc, ((_, w), _)| acc + w);
        debug_assert!(!denom.is_zero());
        let mut entries: Vec<(crate::model::ActionId, Q)> = Vec::new();
        for ((det, w), r) in support.iter().zip(&reach) {
            if !r.contains(h) {
                continue;
            }
            entries.push((det.action_at(model, h), w / &denom));
        }
        table.insert(h.clone(), Distribution::new(entries)?);
    }
    Ok(StochasticAgentPolicy::new(table))
}
