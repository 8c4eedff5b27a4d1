//! Rewriting stochastic or uncertain observations into deterministic ones.
//!
//! A raw model couples transitions and observations into one uncertain
//! template over `S × Z` targets. The rewrite moves the observation into
//! the state: product states `(s, z_a, z_n, z_pub)` observe their own
//! labels deterministically, rewards are lifted from the base state, and
//! transition entries carry over unchanged.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::Error;
use crate::model::{
    AgentObs, NatureObs, PlayOrder, PublicObs, Rpomdp, RpomdpParts, StateId, Stickiness,
};
use crate::num::Q;
use crate::uncertainty::{AffineExpr, UncertaintySet};

/// One target of the joint transition-observation template.
#[derive(Debug, Clone)]
pub struct ObsTarget {
    pub state: StateId,
    pub agent: AgentObs,
    pub nature: NatureObs,
    pub public: PublicObs,
    pub prob: AffineExpr,
}

/// A model whose observations are produced jointly with transitions,
/// possibly stochastically or under uncertainty.
#[derive(Debug, Clone)]
pub struct UncertainObsModel {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub agent_obs_labels: Vec<String>,
    pub nature_obs_labels: Vec<String>,
    pub public_obs_labels: Vec<String>,
    /// The initial state together with the observation triple it emits.
    pub initial: (StateId, AgentObs, NatureObs, PublicObs),
    pub rewards: Vec<Vec<Q>>,
    /// `template[s][a]` lists the possible `(state, observations)` targets.
    pub template: Vec<Vec<Vec<ObsTarget>>>,
    pub uncertainty: UncertaintySet,
    pub stickiness: Stickiness,
    pub play_order: PlayOrder,
}

/// Rewrites a raw model into an equivalent one with deterministic
/// per-state observations over the reachable product states.
pub fn determinize_observations(raw: &UncertainObsModel) -> Result<Rpomdp, Error> {
    let n_states = raw.states.len();
    let n_actions = raw.actions.len();
    if raw.template.len() != n_states || raw.rewards.len() != n_states {
        return Err(Error::Shape("template must cover every state".into()));
    }
    let vertices = raw.uncertainty.vertices();
    if vertices.is_empty() && raw.uncertainty.arity() > 0 {
        return Err(Error::InfeasibleSet);
    }
    for (s, per_state) in raw.template.iter().enumerate() {
        if per_state.len() != n_actions {
            return Err(Error::Shape("template must cover every action".into()));
        }
        for targets in per_state {
            let mut sum = AffineExpr::zero();
            for t in targets {
                sum = sum.add(&t.prob);
                for u in &vertices {
                    let p = t.prob.eval(u);
                    if p < Q::zero() || p > Q::one() {
                        return Err(Error::Shape(format!(
                            "template entry out of [0, 1] at state `{}`",
                            raw.states[s]
                        )));
                    }
                }
            }
            if sum != AffineExpr::one() {
                return Err(Error::Shape(format!(
                    "template row at state `{}` does not sum to 1",
                    raw.states[s]
                )));
            }
        }
    }

    type Product = (usize, usize, usize, usize);
    let initial: Product = (
        raw.initial.0 .0,
        raw.initial.1 .0,
        raw.initial.2 .0,
        raw.initial.3 .0,
    );
    // Reachable product states under symbolically nonzero entries.
    let mut index: BTreeMap<Product, usize> = BTreeMap::new();
    let mut order: Vec<Product> = Vec::new();
    let mut frontier = vec![initial];
    index.insert(initial, 0);
    order.push(initial);
    while let Some(current) = frontier.pop() {
        let (s, _, _, _) = current;
        for per_action in &raw.template[s] {
            for t in per_action {
                if t.prob.is_zero() {
                    continue;
                }
                let target: Product = (t.state.0, t.agent.0, t.nature.0, t.public.0);
                if let std::collections::btree_map::Entry::Vacant(slot) = index.entry(target) {
                    slot.insert(order.len());
                    order.push(target);
                    frontier.push(target);
                }
            }
        }
    }
    // A stable order keeps the construction deterministic.
    let mut sorted: Vec<Product> = order.clone();
    sorted.sort();
    let position: BTreeMap<Product, usize> =
        sorted.iter().enumerate().map(|(i, p)| (*p, i)).collect();

    let name_of = |p: &Product| {
        format!(
            "{}.{}.{}.{}",
            raw.states[p.0],
            raw.agent_obs_labels[p.1],
            raw.nature_obs_labels[p.2],
            raw.public_obs_labels[p.3]
        )
    };
    let n_prod = sorted.len();
    let mut transitions = vec![vec![vec![AffineExpr::zero(); n_prod]; n_actions]; n_prod];
    for (p, &i) in &position {
        for (a, targets) in raw.template[p.0].iter().enumerate() {
            for t in targets {
                if t.prob.is_zero() {
                    continue;
                }
                let target = (t.state.0, t.agent.0, t.nature.0, t.public.0);
                let j = position[&target];
                transitions[i][a][j] = transitions[i][a][j].add(&t.prob);
            }
        }
    }
    let stickiness = match &raw.stickiness {
        Stickiness::ObservationBased { influence } => {
            let mut lifted_influence = BTreeMap::new();
            for (v, pairs) in influence {
                let mut lifted = std::collections::BTreeSet::new();
                for (product, &i) in &position {
                    for (s, a) in pairs {
                        if s.0 == product.0 {
                            lifted.insert((StateId(i), *a));
                        }
                    }
                }
                lifted_influence.insert(*v, lifted);
            }
            Stickiness::ObservationBased {
                influence: lifted_influence,
            }
        }
        other => other.clone(),
    };
    Rpomdp::new(RpomdpParts {
        states: sorted.iter().map(name_of).collect(),
        actions: raw.actions.clone(),
        agent_obs_labels: raw.agent_obs_labels.clone(),
        nature_obs_labels: raw.nature_obs_labels.clone(),
        public_obs_labels: raw.public_obs_labels.clone(),
        initial_state: StateId(position[&initial]),
        obs_agent: sorted.iter().map(|p| AgentObs(p.1)).collect(),
        obs_nature: sorted.iter().map(|p| NatureObs(p.2)).collect(),
        obs_public: sorted.iter().map(|p| PublicObs(p.3)).collect(),
        rewards: sorted.iter().map(|p| raw.rewards[p.0].clone()).collect(),
        transitions,
        uncertainty: raw.uncertainty.clone(),
        stickiness,
        play_order: raw.play_order,
    })
}
