//! Paths, histories, and the bookkeeping of stuck variable values.
//!
//! A path records the full run: states, agent actions, and the assignments
//! nature used at every step. Histories are the per-player observable
//! projections of a path. `fix` accumulates the variable values that have
//! become fixed along a path; `upd` is its single-step form driven purely
//! by observable data, so it also lifts to nature histories.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::error::Error;
use crate::model::{ActionId, AgentObs, NatureObs, PublicObs, Rpomdp, StateId};
use crate::num::Q;
use crate::policies::NaturePolicy;
use crate::uncertainty::{Assignment, PartialAssignment};

/// One step of a path: the action taken, the assignment nature used, and
/// the successor state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathStep {
    pub action: ActionId,
    pub assignment: Assignment,
    pub state: StateId,
}

/// A finite run through a model. A path of length `n` has `n` steps and
/// `n + 1` states.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    pub initial: StateId,
    pub steps: Vec<PathStep>,
}

impl Path {
    pub fn start(initial: StateId) -> Self {
        Path {
            initial,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_state(&self) -> StateId {
        self.steps.last().map_or(self.initial, |s| s.state)
    }

    /// The state occupied before step `k` (so `state_at(0)` is the initial).
    pub fn state_at(&self, k: usize) -> StateId {
        if k == 0 {
            self.initial
        } else {
            self.steps[k - 1].state
        }
    }
}

/// The three observation labels a state emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObsTriple {
    pub agent: AgentObs,
    pub nature: NatureObs,
    pub public: PublicObs,
}

impl ObsTriple {
    pub fn of(model: &Rpomdp, s: StateId) -> Self {
        ObsTriple {
            agent: model.agent_obs(s),
            nature: model.nature_obs(s),
            public: model.public_obs(s),
        }
    }
}

/// The observable trace nobody sees in full: all three observation streams
/// plus actions and assignments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointHistory {
    pub initial: ObsTriple,
    pub steps: Vec<(ActionId, Assignment, ObsTriple)>,
}

impl JointHistory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The agent-observable projection: drops nature's private stream and
    /// all assignments.
    pub fn agent_part(&self) -> AgentHistory {
        AgentHistory {
            initial: (self.initial.agent, self.initial.public),
            steps: self
                .steps
                .iter()
                .map(|(a, _, z)| (*a, (z.agent, z.public)))
                .collect(),
        }
    }

    /// The nature-observable projection: keeps actions and assignments,
    /// drops the agent's private stream.
    pub fn nature_part(&self) -> NatureHistory {
        NatureHistory {
            initial: (self.initial.nature, self.initial.public),
            steps: self
                .steps
                .iter()
                .map(|(a, u, z)| (*a, u.clone(), (z.nature, z.public)))
                .collect(),
        }
    }
}

/// What the agent sees: its private/public observation pairs and its own
/// actions. Assignments never appear here.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentHistory {
    pub initial: (AgentObs, PublicObs),
    pub steps: Vec<(ActionId, (AgentObs, PublicObs))>,
}

impl AgentHistory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// What nature sees: its private/public observation pairs, the agent's
/// actions, and its own assignments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NatureHistory {
    pub initial: (NatureObs, PublicObs),
    pub steps: Vec<(ActionId, Assignment, (NatureObs, PublicObs))>,
}

impl NatureHistory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The observation pair of the state currently occupied.
    pub fn last_obs(&self) -> (NatureObs, PublicObs) {
        self.steps.last().map_or(self.initial, |(_, _, z)| *z)
    }
}

/// Single-step update of the fixed variables, driven by observable data:
/// variables that stick for `(z_n, z_pub, a)` take their value from `u`,
/// all others keep their previous binding.
///
/// Folding this along a path reproduces [`fix`]. Errors if `u` disagrees
/// with an already fixed value.
pub fn upd(
    model: &Rpomdp,
    partial: &PartialAssignment,
    u: &Assignment,
    z_n: NatureObs,
    z_pub: PublicObs,
    a: ActionId,
) -> Result<PartialAssignment, Error> {
    if !u.agrees(partial) {
        return Err(Error::InvalidChoice);
    }
    let mut out = partial.clone();
    for v in model.sticking_for_observed(z_n, z_pub, a)? {
        out.set(v, u.get(v).clone());
    }
    Ok(out)
}

/// The partial assignment of variable values that remain fixed after `path`.
///
/// Inductively: nothing is fixed at the start, and each step fixes, for the
/// variables that stick at the step's origin state and action, the values
/// the step's assignment gave them.
pub fn fix(model: &Rpomdp, path: &Path) -> PartialAssignment {
    let mut acc = model.no_restriction();
    let mut current = path.initial;
    for step in &path.steps {
        let sticking = model
            .sticking_variables(current, step.action)
            .expect("path states and actions are in range");
        for v in sticking {
            if !acc.is_defined(v) {
                acc.set(v, step.assignment.get(v).clone());
            }
        }
        current = step.state;
    }
    acc
}

/// `fix` lifted to nature histories, using only observable step data.
pub fn fix_for_nature_history(model: &Rpomdp, history: &NatureHistory) -> PartialAssignment {
    let mut acc = model.no_restriction();
    let mut obs = history.initial;
    for (a, u, next_obs) in &history.steps {
        let sticking = model
            .sticking_for_observed(obs.0, obs.1, *a)
            .expect("history observations and actions are in range");
        for v in sticking {
            if !acc.is_defined(v) {
                acc.set(v, u.get(v).clone());
            }
        }
        obs = *next_obs;
    }
    acc
}

/// A path is valid when every step uses a member assignment that agrees
/// with the variables fixed by the preceding prefix, and every transition
/// it takes has positive probability under that assignment.
pub fn path_valid(model: &Rpomdp, path: &Path) -> bool {
    let arity = model.uncertainty().arity();
    let mut fixed = model.no_restriction();
    let mut current = path.initial;
    if current.0 >= model.n_states() {
        return false;
    }
    for step in &path.steps {
        if step.action.0 >= model.n_actions()
            || step.state.0 >= model.n_states()
            || step.assignment.arity() != arity
        {
            return false;
        }
        if !model.uncertainty().contains(&step.assignment) {
            return false;
        }
        if !step.assignment.agrees(&fixed) {
            return false;
        }
        let prob = model
            .transition(current, step.action, step.state)
            .eval(&step.assignment);
        if prob <= Q::zero() {
            return false;
        }
        fixed = upd(
            model,
            &fixed,
            &step.assignment,
            model.nature_obs(current),
            model.public_obs(current),
            step.action,
        )
        .expect("agreement was checked above");
        current = step.state;
    }
    true
}

/// Applies the joint observation map to a path.
pub fn observe_joint(model: &Rpomdp, path: &Path) -> JointHistory {
    JointHistory {
        initial: ObsTriple::of(model, path.initial),
        steps: path
            .steps
            .iter()
            .map(|step| {
                (
                    step.action,
                    step.assignment.clone(),
                    ObsTriple::of(model, step.state),
                )
            })
            .collect(),
    }
}

/// Applies the agent observation map to a path.
pub fn observe_agent(model: &Rpomdp, path: &Path) -> AgentHistory {
    observe_joint(model, path).agent_part()
}

/// Applies the nature observation map to a path.
pub fn observe_nature(model: &Rpomdp, path: &Path) -> NatureHistory {
    observe_joint(model, path).nature_part()
}

/// A joint history together with the states it may currently occupy.
#[derive(Debug, Clone)]
pub(crate) struct SupportedHistory {
    pub history: JointHistory,
    pub fixed: PartialAssignment,
    pub support: BTreeSet<StateId>,
}

pub(crate) fn initial_supported(model: &Rpomdp) -> SupportedHistory {
    let mut support = BTreeSet::new();
    support.insert(model.initial_state());
    SupportedHistory {
        history: JointHistory {
            initial: ObsTriple::of(model, model.initial_state()),
            steps: Vec::new(),
        },
        fixed: model.no_restriction(),
        support,
    }
}

/// Extends a supported history by one `(a, u)` choice, splitting by the
/// successor observation triple. Only extensions whose support is nonempty
/// (some transition has positive probability) are returned.
pub(crate) fn extend_supported(
    model: &Rpomdp,
    node: &SupportedHistory,
    a: ActionId,
    u: &Assignment,
) -> Vec<SupportedHistory> {
    let mut by_obs: Vec<(ObsTriple, BTreeSet<StateId>)> = Vec::new();
    for &s in &node.support {
        for next in model.states() {
            if model.transition(s, a, next).eval(u) > Q::zero() {
                let triple = ObsTriple::of(model, next);
                match by_obs.iter_mut().find(|(z, _)| *z == triple) {
                    Some((_, set)) => {
                        set.insert(next);
                    }
                    None => {
                        let mut set = BTreeSet::new();
                        set.insert(next);
                        by_obs.push((triple, set));
                    }
                }
            }
        }
    }
    let (z_n, z_pub) = node.history.nature_part().last_obs();
    by_obs
        .into_iter()
        .map(|(triple, support)| {
            let mut history = node.history.clone();
            history.steps.push((a, u.clone(), triple));
            let fixed = upd(model, &node.fixed, u, z_n, z_pub, a)
                .expect("callers pass agreeing assignments");
            SupportedHistory {
                history,
                fixed,
                support,
            }
        })
        .collect()
}

/// The joint histories of length `t` that `theta` can reach.
///
/// For a deterministic policy these follow its single choices; a stochastic
/// policy contributes every supported choice; a mixed policy contributes the
/// union over its supported deterministic policies.
pub fn relevant_histories(
    model: &Rpomdp,
    theta: &NaturePolicy,
    t: usize,
) -> Result<BTreeSet<JointHistory>, Error> {
    match theta {
        NaturePolicy::Mixed(mixed) => {
            let mut out = BTreeSet::new();
            for (det, _) in mixed.support() {
                let single = NaturePolicy::Deterministic(det.clone());
                out.extend(relevant_histories(model, &single, t)?);
            }
            Ok(out)
        }
        _ => {
            let mut frontier = vec![initial_supported(model)];
            for _ in 0..t {
                let mut next = Vec::new();
                for node in &frontier {
                    let h_n = node.history.nature_part();
                    for a in model.actions() {
                        let choices = theta.support_at(model, &h_n, a)?;
                        for u in choices {
                            if !u.agrees(&node.fixed) || !model.uncertainty().contains(&u) {
                                continue;
                            }
                            next.extend(extend_supported(model, node, a, &u));
                        }
                    }
                }
                frontier = next;
            }
            Ok(frontier.into_iter().map(|n| n.history).collect())
        }
    }
}
