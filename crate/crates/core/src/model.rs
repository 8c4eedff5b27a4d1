//! The robust POMDP data model.
//!
//! A model couples a finite POMDP skeleton (states, actions, three
//! deterministic observation maps, rewards) with an uncertain transition
//! template whose entries are affine in the variables of an
//! [`UncertaintySet`], a stickiness rule that decides when the adversary's
//! variable choices become fixed, and an order of play.
//!
//! Model values are immutable after construction; every operation here is a
//! pure read.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::Error;
use crate::num::{format_rational, Q};
use crate::uncertainty::{AffineExpr, Assignment, PartialAssignment, UncertaintySet, VariableId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub usize);

/// Label index into the agent-private observation alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentObs(pub usize);

/// Label index into the nature-private observation alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NatureObs(pub usize);

/// Label index into the public observation alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PublicObs(pub usize);

/// Which player moves first in every round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlayOrder {
    AgentFirst,
    NatureFirst,
}

impl fmt::Display for PlayOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayOrder::AgentFirst => write!(f, "agent-first"),
            PlayOrder::NatureFirst => write!(f, "nature-first"),
        }
    }
}

/// When a variable choice sticks: never, immediately, when the variable
/// could have influenced the observed transition, or by explicit table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stickiness {
    Zero,
    Full,
    ObservationBased {
        /// Per variable, the state-action pairs whose transition row the
        /// variable influences.
        influence: BTreeMap<VariableId, BTreeSet<(StateId, ActionId)>>,
    },
    Custom {
        /// Entries absent from the table do not stick.
        table: BTreeMap<(VariableId, NatureObs, PublicObs, ActionId), bool>,
    },
}

/// A single validation failure with the offending location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyUncertainty,
    RowSumNotOne {
        state: StateId,
        action: ActionId,
        sum: AffineExpr,
    },
    EntryOutOfRange {
        state: StateId,
        action: ActionId,
        next: StateId,
        at: Assignment,
        value: Q,
    },
}

/// Informational findings that do not make a model invalid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StructureNote {
    /// The entry is zero for some members and positive for others, so the
    /// uncertainty set does not preserve the transition graph.
    GraphChanging {
        state: StateId,
        action: ActionId,
        next: StateId,
    },
    /// A declared influence pair whose transition row never mentions the
    /// variable; harmless, but it makes the variable stick more often.
    InfluenceOutsideTemplate {
        variable: VariableId,
        state: StateId,
        action: ActionId,
    },
}

/// Outcome of [`Rpomdp::validate`]. The model is well-formed iff
/// `violations` is empty; `notes` are informational.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub notes: Vec<StructureNote>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A robust POMDP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rpomdp {
    states: Vec<String>,
    actions: Vec<String>,
    agent_obs_labels: Vec<String>,
    nature_obs_labels: Vec<String>,
    public_obs_labels: Vec<String>,
    initial_state: StateId,
    obs_agent: Vec<AgentObs>,
    obs_nature: Vec<NatureObs>,
    obs_public: Vec<PublicObs>,
    rewards: Vec<Vec<Q>>,
    transitions: Vec<Vec<Vec<AffineExpr>>>,
    uncertainty: UncertaintySet,
    stickiness: Stickiness,
    play_order: PlayOrder,
}

/// All the pieces of a model, consumed by [`Rpomdp::new`].
#[derive(Debug, Clone)]
pub struct RpomdpParts {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub agent_obs_labels: Vec<String>,
    pub nature_obs_labels: Vec<String>,
    pub public_obs_labels: Vec<String>,
    pub initial_state: StateId,
    pub obs_agent: Vec<AgentObs>,
    pub obs_nature: Vec<NatureObs>,
    pub obs_public: Vec<PublicObs>,
    /// `rewards[s][a]`, defaulting handled by the caller.
    pub rewards: Vec<Vec<Q>>,
    /// `transitions[s][a][s']` as affine expressions over the variables.
    pub transitions: Vec<Vec<Vec<AffineExpr>>>,
    pub uncertainty: UncertaintySet,
    pub stickiness: Stickiness,
    pub play_order: PlayOrder,
}

impl Rpomdp {
    /// Builds a model after checking structural well-formedness (shapes and
    /// index ranges). Probabilistic soundness is checked by [`Self::validate`].
    pub fn new(parts: RpomdpParts) -> Result<Self, Error> {
        let n_states = parts.states.len();
        let n_actions = parts.actions.len();
        if n_states == 0 {
            return Err(Error::Shape("a model needs at least one state".into()));
        }
        if n_actions == 0 {
            return Err(Error::Shape("a model needs at least one action".into()));
        }
        if parts.initial_state.0 >= n_states {
            return Err(Error::Shape("initial state out of range".into()));
        }
        for (name, len) in [
            ("agent observation map", parts.obs_agent.len()),
            ("nature observation map", parts.obs_nature.len()),
            ("public observation map", parts.obs_public.len()),
            ("reward table", parts.rewards.len()),
            ("transition template", parts.transitions.len()),
        ] {
            if len != n_states {
                return Err(Error::Shape(format!("{name} must cover every state")));
            }
        }
        for z in &parts.obs_agent {
            if z.0 >= parts.agent_obs_labels.len() {
                return Err(Error::Shape("agent observation out of range".into()));
            }
        }
        for z in &parts.obs_nature {
            if z.0 >= parts.nature_obs_labels.len() {
                return Err(Error::Shape("nature observation out of range".into()));
            }
        }
        for z in &parts.obs_public {
            if z.0 >= parts.public_obs_labels.len() {
                return Err(Error::Shape("public observation out of range".into()));
            }
        }
        for row in &parts.rewards {
            if row.len() != n_actions {
                return Err(Error::Shape("reward table must cover every action".into()));
            }
        }
        let arity = parts.uncertainty.arity();
        for per_state in &parts.transitions {
            if per_state.len() != n_actions {
                return Err(Error::Shape(
                    "transition template must cover every action".into(),
                ));
            }
            for per_action in per_state {
                if per_action.len() != n_states {
                    return Err(Error::Shape(
                        "transition template must cover every successor".into(),
                    ));
                }
                for expr in per_action {
                    for (v, _) in expr.coefficients() {
                        if v.0 >= arity {
                            return Err(Error::Shape(
                                "transition entry mentions an unknown variable".into(),
                            ));
                        }
                    }
                }
            }
        }
        if let Stickiness::ObservationBased { influence } = &parts.stickiness {
            for (v, pairs) in influence {
                if v.0 >= arity {
                    return Err(Error::Shape(
                        "influence mentions an unknown variable".into(),
                    ));
                }
                for (s, a) in pairs {
                    if s.0 >= n_states || a.0 >= n_actions {
                        return Err(Error::Shape("influence pair out of range".into()));
                    }
                }
            }
        }
        Ok(Rpomdp {
            states: parts.states,
            actions: parts.actions,
            agent_obs_labels: parts.agent_obs_labels,
            nature_obs_labels: parts.nature_obs_labels,
            public_obs_labels: parts.public_obs_labels,
            initial_state: parts.initial_state,
            obs_agent: parts.obs_agent,
            obs_nature: parts.obs_nature,
            obs_public: parts.obs_public,
            rewards: parts.rewards,
            transitions: parts.transitions,
            uncertainty: parts.uncertainty,
            stickiness: parts.stickiness,
            play_order: parts.play_order,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len()).map(StateId)
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> {
        (0..self.actions.len()).map(ActionId)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.0]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.actions[a.0]
    }

    pub fn state(&self, name: &str) -> Result<StateId, Error> {
        self.states
            .iter()
            .position(|n| n == name)
            .map(StateId)
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn action(&self, name: &str) -> Result<ActionId, Error> {
        self.actions
            .iter()
            .position(|n| n == name)
            .map(ActionId)
            .ok_or_else(|| Error::UnknownAction(name.to_string()))
    }

    pub fn initial_state(&self) -> StateId {
        self.initial_state
    }

    pub fn agent_obs(&self, s: StateId) -> AgentObs {
        self.obs_agent[s.0]
    }

    pub fn nature_obs(&self, s: StateId) -> NatureObs {
        self.obs_nature[s.0]
    }

    pub fn public_obs(&self, s: StateId) -> PublicObs {
        self.obs_public[s.0]
    }

    pub fn agent_obs_label(&self, z: AgentObs) -> &str {
        &self.agent_obs_labels[z.0]
    }

    pub fn nature_obs_label(&self, z: NatureObs) -> &str {
        &self.nature_obs_labels[z.0]
    }

    pub fn public_obs_label(&self, z: PublicObs) -> &str {
        &self.public_obs_labels[z.0]
    }

    pub fn agent_obs_labels(&self) -> &[String] {
        &self.agent_obs_labels
    }

    pub fn nature_obs_labels(&self) -> &[String] {
        &self.nature_obs_labels
    }

    pub fn public_obs_labels(&self) -> &[String] {
        &self.public_obs_labels
    }

    pub fn reward(&self, s: StateId, a: ActionId) -> &Q {
        &self.rewards[s.0][a.0]
    }

    pub fn transition(&self, s: StateId, a: ActionId, next: StateId) -> &AffineExpr {
        &self.transitions[s.0][a.0][next.0]
    }

    pub fn uncertainty(&self) -> &UncertaintySet {
        &self.uncertainty
    }

    pub fn stickiness(&self) -> &Stickiness {
        &self.stickiness
    }

    pub fn play_order(&self) -> PlayOrder {
        self.play_order
    }

    /// The totally undefined restriction over this model's variables.
    pub fn no_restriction(&self) -> PartialAssignment {
        PartialAssignment::undefined(self.uncertainty.arity())
    }

    /// Whether the value chosen for `v` sticks after a step whose origin
    /// state showed nature `z_n`/`z_pub` and where the agent played `a`.
    pub fn stick(
        &self,
        v: VariableId,
        z_n: NatureObs,
        z_pub: PublicObs,
        a: ActionId,
    ) -> Result<bool, Error> {
        if v.0 >= self.uncertainty.arity() {
            return Err(Error::UnknownVariable(format!("#{}", v.0)));
        }
        if z_n.0 >= self.nature_obs_labels.len() {
            return Err(Error::UnknownObservation(format!("nature #{}", z_n.0)));
        }
        if z_pub.0 >= self.public_obs_labels.len() {
            return Err(Error::UnknownObservation(format!("public #{}", z_pub.0)));
        }
        if a.0 >= self.actions.len() {
            return Err(Error::UnknownAction(format!("#{}", a.0)));
        }
        Ok(match &self.stickiness {
            Stickiness::Zero => false,
            Stickiness::Full => true,
            Stickiness::ObservationBased { influence } => influence.get(&v).is_some_and(|pairs| {
                pairs.iter().any(|(s, pa)| {
                    *pa == a && self.obs_nature[s.0] == z_n && self.obs_public[s.0] == z_pub
                })
            }),
            Stickiness::Custom { table } => {
                table.get(&(v, z_n, z_pub, a)).copied().unwrap_or(false)
            }
        })
    }

    /// The variables that stick for a step from `s` under `a`.
    pub fn sticking_variables(
        &self,
        s: StateId,
        a: ActionId,
    ) -> Result<BTreeSet<VariableId>, Error> {
        if s.0 >= self.states.len() {
            return Err(Error::UnknownState(format!("#{}", s.0)));
        }
        self.sticking_for_observed(self.obs_nature[s.0], self.obs_public[s.0], a)
    }

    /// The variables that stick given only the observable step data.
    pub fn sticking_for_observed(
        &self,
        z_n: NatureObs,
        z_pub: PublicObs,
        a: ActionId,
    ) -> Result<BTreeSet<VariableId>, Error> {
        let mut out = BTreeSet::new();
        for v in self.uncertainty.variables() {
            if self.stick(v, z_n, z_pub, a)? {
                out.insert(v);
            }
        }
        Ok(out)
    }

    /// Checks every model invariant and reports all findings.
    ///
    /// Violations are data, not failures: the report lists every broken
    /// invariant together with the offending location, and is empty exactly
    /// when the model is well-formed. Graph-preservation findings are
    /// attached as informational notes.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let vertices = self.uncertainty.vertices();
        if vertices.is_empty() {
            report.violations.push(Violation::EmptyUncertainty);
        }
        for s in self.states() {
            for a in self.actions() {
                let mut sum = AffineExpr::zero();
                for next in self.states() {
                    sum = sum.add(self.transition(s, a, next));
                }
                let one = AffineExpr::one();
                if sum != one {
                    report.violations.push(Violation::RowSumNotOne {
                        state: s,
                        action: a,
                        sum,
                    });
                }
                for next in self.states() {
                    let expr = self.transition(s, a, next);
                    let mut can_be_zero = false;
                    let mut can_be_positive = false;
                    for u in &vertices {
                        let value = expr.eval(u);
                        if value < Q::zero() || value > Q::one() {
                            report.violations.push(Violation::EntryOutOfRange {
                                state: s,
                                action: a,
                                next,
                                at: u.clone(),
                                value: value.clone(),
                            });
                        }
                        if value.is_zero() {
                            can_be_zero = true;
                        } else if value > Q::zero() {
                            can_be_positive = true;
                        }
                    }
                    if can_be_zero && can_be_positive {
                        report.notes.push(StructureNote::GraphChanging {
                            state: s,
                            action: a,
                            next,
                        });
                    }
                }
            }
        }
        if let Stickiness::ObservationBased { influence } = &self.stickiness {
            for (v, pairs) in influence {
                for (s, a) in pairs {
                    let row_mentions = self
                        .states()
                        .any(|next| self.transition(*s, *a, next).depends_on(*v));
                    if !row_mentions {
                        report.notes.push(StructureNote::InfluenceOutsideTemplate {
                            variable: *v,
                            state: *s,
                            action: *a,
                        });
                    }
                }
            }
        }
        report
    }

    /// True iff the entry can be strictly positive for some member.
    pub fn possibly_positive(&self, s: StateId, a: ActionId, next: StateId) -> bool {
        let expr = self.transition(s, a, next);
        if expr.is_constant() {
            return expr.constant_part() > &Q::zero();
        }
        self.uncertainty
            .vertices()
            .iter()
            .any(|u| expr.eval(u) > Q::zero())
    }

    /// The influence relation derived from the template itself: variable `v`
    /// influences `(s, a)` iff some entry of that row mentions `v`.
    pub fn derived_influence(&self) -> BTreeMap<VariableId, BTreeSet<(StateId, ActionId)>> {
        let mut out: BTreeMap<VariableId, BTreeSet<(StateId, ActionId)>> = BTreeMap::new();
        for s in self.states() {
            for a in self.actions() {
                for next in self.states() {
                    for (v, _) in self.transition(s, a, next).coefficients() {
                        out.entry(v).or_default().insert((s, a));
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyUncertainty => write!(f, "uncertainty set has no members"),
            Violation::RowSumNotOne { state, action, sum } => write!(
                f,
                "row (s{}, a{}) sums to {} instead of the constant 1",
                state.0, action.0, sum
            ),
            Violation::EntryOutOfRange {
                state,
                action,
                next,
                value,
                ..
            } => write!(
                f,
                "entry (s{}, a{}, s{}) evaluates to {} outside [0, 1]",
                state.0,
                action.0,
                next.0,
                format_rational(value)
            ),
        }
    }
}

impl fmt::Display for StructureNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureNote::GraphChanging {
                state,
                action,
                next,
            } => write!(
                f,
                "entry (s{}, a{}, s{}) is zero for some members and positive for others",
                state.0, action.0, next.0
            ),
            StructureNote::InfluenceOutsideTemplate {
                variable,
                state,
                action,
            } => write!(
                f,
                "influence pair (s{}, a{}) for v{} never appears in that row's entries",
                state.0, action.0, variable.0
            ),
        }
    }
}
