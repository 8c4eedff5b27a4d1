//! Shared helpers for the integration suites: seeded random valid policies
//! and exhaustive path enumeration over vertex assignments.
#![allow(dead_code)] // not every suite uses every helper

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use rpomdp::model::{ActionId, PlayOrder, Rpomdp, StateId};
use rpomdp::num::{q, Q};
use rpomdp::policies::{Distribution, NatureKey, StochasticAgentPolicy, StochasticNaturePolicy};
use rpomdp::trajectories::{
    fix_for_nature_history, observe_joint, path_valid, AgentHistory, Path, PathStep,
};
use rpomdp::uncertainty::Assignment;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random probability split `r/(r+s)` with small numerators.
fn random_split(rng: &mut ChaCha8Rng) -> (Q, Q) {
    let r = rng.gen_range(1..8i64);
    let s = rng.gen_range(1..8i64);
    (q(r, r + s), q(s, r + s))
}

/// A seeded valid stochastic agent policy covering the histories reachable
/// under its own support up to `horizon`. Roughly half the table entries
/// are point masses.
pub fn random_agent_policy(
    model: &Rpomdp,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> StochasticAgentPolicy {
    let vertices = model.uncertainty().vertices();
    let mut table: BTreeMap<AgentHistory, Distribution<ActionId>> = BTreeMap::new();
    let mut frontier: Vec<(AgentHistory, BTreeSet<StateId>)> = vec![(
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
        let mut next: Vec<(AgentHistory, BTreeSet<StateId>)> = Vec::new();
        for (h, support) in &frontier {
            let n = model.n_actions();
            let dist = if n == 1 || rng.gen_bool(0.5) {
                Distribution::dirac(ActionId(rng.gen_range(0..n)))
            } else {
                let first = rng.gen_range(0..n);
                let mut second = rng.gen_range(0..n);
                while second == first {
                    second = rng.gen_range(0..n);
                }
                let (p1, p2) = random_split(rng);
                Distribution::new(vec![(ActionId(first), p1), (ActionId(second), p2)]).unwrap()
            };
            let actions: Vec<ActionId> = dist.support().copied().collect();
            table.insert(h.clone(), dist);
            for a in actions {
                let mut by_obs: BTreeMap<_, BTreeSet<StateId>> = BTreeMap::new();
                for &s in support {
                    for nxt in model.states() {
                        let expr = model.transition(s, a, nxt);
                        let reachable = if expr.is_constant() {
                            expr.constant_part() > &q(0, 1)
                        } else {
                            vertices.iter().any(|u| expr.eval(u) > q(0, 1))
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
                    next.push((h2, sup));
                }
            }
        }
        next.sort_by(|a, b| a.0.cmp(&b.0));
        next.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        frontier = next;
    }
    StochasticAgentPolicy::new(table)
}

/// A seeded valid stochastic nature policy over vertex choices, randomizing
/// two-point distributions at up to `random_keys` keys and playing point
/// masses elsewhere.
pub fn random_nature_policy(
    model: &Rpomdp,
    horizon: usize,
    rng: &mut ChaCha8Rng,
    random_keys: usize,
) -> StochasticNaturePolicy {
    let mode = model.play_order();
    let mut budget = random_keys;
    let mut table: BTreeMap<NatureKey, Distribution<Assignment>> = BTreeMap::new();
    let mut frontier = vec![rpomdp_initial_supported(model)];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for node in &frontier {
            let h_n = node.history.nature_part();
            for a in model.actions() {
                let key = NatureKey::for_mode(mode, h_n.clone(), a);
                if !table.contains_key(&key) {
                    let fixed = fix_for_nature_history(model, &h_n);
                    let candidates = model.uncertainty().constrain(&fixed).unwrap().vertices();
                    let dist = if candidates.len() > 1 && budget > 0 && rng.gen_bool(0.6) {
                        budget -= 1;
                        let mut idx: Vec<usize> = (0..candidates.len()).collect();
                        idx.shuffle(rng);
                        let (p1, p2) = random_split(rng);
                        Distribution::new(vec![
                            (candidates[idx[0]].clone(), p1),
                            (candidates[idx[1]].clone(), p2),
                        ])
                        .unwrap()
                    } else {
                        let pick = rng.gen_range(0..candidates.len());
                        Distribution::dirac(candidates[pick].clone())
                    };
                    table.insert(key.clone(), dist);
                }
                for (u, _) in table[&key].clone().iter() {
                    next.extend(extend_node(model, node, a, u));
                }
            }
        }
        next.sort_by(|a: &SupportNode, b: &SupportNode| a.history.cmp(&b.history));
        next.dedup_by(|a, b| a.history == b.history && a.support == b.support);
        frontier = next;
    }
    StochasticNaturePolicy::new(mode, table)
}

/// Minimal reimplementation of joint-history support tracking for tests.
pub struct SupportNode {
    pub history: rpomdp::JointHistory,
    pub fixed: rpomdp::PartialAssignment,
    pub support: BTreeSet<StateId>,
}

pub fn rpomdp_initial_supported(model: &Rpomdp) -> SupportNode {
    SupportNode {
        history: observe_joint(model, &Path::start(model.initial_state())),
        fixed: model.no_restriction(),
        support: std::iter::once(model.initial_state()).collect(),
    }
}

pub fn extend_node(
    model: &Rpomdp,
    node: &SupportNode,
    a: ActionId,
    u: &Assignment,
) -> Vec<SupportNode> {
    let mut by_obs: BTreeMap<rpomdp::ObsTriple, BTreeSet<StateId>> = BTreeMap::new();
    for &s in &node.support {
        for nxt in model.states() {
            if model.transition(s, a, nxt).eval(u) > q(0, 1) {
                by_obs
                    .entry(rpomdp::ObsTriple::of(model, nxt))
                    .or_default()
                    .insert(nxt);
            }
        }
    }
    let (z_n, z_pub) = node.history.nature_part().last_obs();
    by_obs
        .into_iter()
        .map(|(z, support)| {
            let mut history = node.history.clone();
            history.steps.push((a, u.clone(), z));
            let fixed = rpomdp::upd(model, &node.fixed, u, z_n, z_pub, a).unwrap();
            SupportNode {
                history,
                fixed,
                support,
            }
        })
        .collect()
}

/// All valid paths of exactly `len` steps whose assignments are vertices.
pub fn vertex_paths(model: &Rpomdp, len: usize) -> Vec<Path> {
    let vertices = model.uncertainty().vertices();
    let mut out = Vec::new();
    let mut stack = vec![Path::start(model.initial_state())];
    for depth in 0..=len {
        if depth == len {
            out.extend(stack.iter().cloned());
            break;
        }
        let mut next = Vec::new();
        for path in &stack {
            let s = path.last_state();
            for a in model.actions() {
                for u in &vertices {
                    for nxt in model.states() {
                        let mut extended = path.clone();
                        extended.steps.push(PathStep {
                            action: a,
                            assignment: u.clone(),
                            state: nxt,
                        });
                        if model.transition(s, a, nxt).eval(u) > q(0, 1)
                            && path_valid(model, &extended)
                        {
                            next.push(extended);
                        }
                    }
                }
            }
        }
        stack = next;
    }
    out
}

/// Play-order aware benchmark variants used across the suites.
pub fn suite_models() -> Vec<(String, Rpomdp)> {
    use rpomdp::benchmarks::*;
    let mut out = Vec::new();
    for id in BenchmarkId::all() {
        let model = build_benchmark(id).unwrap();
        out.push((id.as_str().to_string(), model));
    }
    // Alternate play orders for the two order-sensitive models.
    let fig3_nf = build_benchmark_variant(
        BenchmarkId::Fig3OrderSmall,
        &BenchmarkVariant {
            stickiness: None,
            play_order: Some(PlayOrder::NatureFirst),
        },
    )
    .unwrap();
    out.push(("fig3_order_small/nature-first".into(), fig3_nf));
    let fig2_af = build_benchmark_variant(
        BenchmarkId::Fig2Sticky,
        &BenchmarkVariant {
            stickiness: None,
            play_order: Some(PlayOrder::AgentFirst),
        },
    )
    .unwrap();
    out.push(("fig2_sticky/agent-first".into(), fig2_af));
    out
}
