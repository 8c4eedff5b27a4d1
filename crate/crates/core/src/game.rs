//! The turn-based game view of a robust POMDP.
//!
//! Each round of the source model becomes two moves: the agent picks an
//! action, nature picks an admissible assignment (in the model's play
//! order). Game states pair a base state with the partial assignment of
//! fixed variable values, so nature's available moves at a state are
//! exactly the members that agree with it. The game is never materialized
//! as a state set; it is an on-demand transition system, and states reached
//! along different runs with identical components coincide.
//!
//! Paths, per-player histories, and policies of the two views are related
//! by structural bijections; corresponding policy pairs induce identical
//! values.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::error::Error;
use crate::model::{ActionId, AgentObs, NatureObs, PlayOrder, PublicObs, Rpomdp, StateId};
use crate::num::{format_rational, Q};
use crate::policies::{Distribution, StochasticAgentPolicy, StochasticNaturePolicy};
use crate::trajectories::{upd, AgentHistory, NatureHistory, Path, PathStep};
use crate::uncertainty::{Assignment, PartialAssignment};

/// A game state where the agent is to move. In nature-first models it also
/// carries nature's pending assignment for the round.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PosgAgentState {
    pub base: StateId,
    pub fixed: PartialAssignment,
    pub pending: Option<Assignment>,
}

/// A game state where nature is to move. In agent-first models the action
/// component is the action just played; in nature-first models it is the
/// previous round's action, absent at the start.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PosgNatureState {
    pub base: StateId,
    pub fixed: PartialAssignment,
    pub action: Option<ActionId>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PosgState {
    Agent(PosgAgentState),
    Nature(PosgNatureState),
}

/// What the agent observes at a game state.
pub type PosgAgentObs = (AgentObs, PublicObs);
/// What nature observes at a game state; the action slot is filled exactly
/// at agent-first nature states and at nature-first nature states with a
/// previous action.
pub type PosgNatureObs = (NatureObs, PublicObs, Option<ActionId>);

/// The on-demand game view over a source model.
pub struct Posg<'m> {
    model: &'m Rpomdp,
    horizon: usize,
}

/// Builds the game view of a model, bounded at `horizon` rounds for
/// reachable-fragment expansion.
pub fn build_posg(model: &Rpomdp, horizon: usize) -> Posg<'_> {
    Posg { model, horizon }
}

impl<'m> Posg<'m> {
    pub fn model(&self) -> &'m Rpomdp {
        self.model
    }

    pub fn mode(&self) -> PlayOrder {
        self.model.play_order()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_state(&self) -> PosgState {
        let fixed = self.model.no_restriction();
        match self.mode() {
            PlayOrder::AgentFirst => PosgState::Agent(PosgAgentState {
                base: self.model.initial_state(),
                fixed,
                pending: None,
            }),
            PlayOrder::NatureFirst => PosgState::Nature(PosgNatureState {
                base: self.model.initial_state(),
                fixed,
                action: None,
            }),
        }
    }

    /// Agent move in an agent-first game: deterministic hand-off to nature.
    pub fn agent_move(
        &self,
        state: &PosgAgentState,
        a: ActionId,
    ) -> Result<PosgNatureState, Error> {
        match self.mode() {
            PlayOrder::AgentFirst => Ok(PosgNatureState {
                base: state.base,
                fixed: state.fixed.clone(),
                action: Some(a),
            }),
            PlayOrder::NatureFirst => Err(Error::Contract(
                "nature-first agent moves resolve the transition; use agent_move_resolving".into(),
            )),
        }
    }

    /// Nature move in an agent-first game: the chosen assignment must agree
    /// with the fixed variables; the round resolves stochastically.
    pub fn nature_move(
        &self,
        state: &PosgNatureState,
        u: &Assignment,
    ) -> Result<Vec<(PosgAgentState, Q)>, Error> {
        let model = self.model;
        if !u.agrees(&state.fixed) || !model.uncertainty().contains(u) {
            return Err(Error::InvalidChoice);
        }
        match self.mode() {
            PlayOrder::AgentFirst => {
                let a = state.action.ok_or_else(|| {
                    Error::Contract("agent-first nature state carries the action".into())
                })?;
                let s = state.base;
                let fixed = upd(
                    model,
                    &state.fixed,
                    u,
                    model.nature_obs(s),
                    model.public_obs(s),
                    a,
                )?;
                let mut out = Vec::new();
                for next in model.states() {
                    let p = model.transition(s, a, next).eval(u);
                    if p > Q::zero() {
                        out.push((
                            PosgAgentState {
                                base: next,
                                fixed: fixed.clone(),
                                pending: None,
                            },
                            p,
                        ));
                    }
                }
                Ok(out)
            }
            PlayOrder::NatureFirst => Ok(vec![(
                PosgAgentState {
                    base: state.base,
                    fixed: state.fixed.clone(),
                    pending: Some(u.clone()),
                },
                Q::one(),
            )]),
        }
    }

    /// Agent move in a nature-first game: resolves the round using the
    /// pending assignment.
    pub fn agent_move_resolving(
        &self,
        state: &PosgAgentState,
        a: ActionId,
    ) -> Result<Vec<(PosgNatureState, Q)>, Error> {
        let model = self.model;
        let u = state.pending.as_ref().ok_or_else(|| {
            Error::Contract("nature-first agent state carries the pending assignment".into())
        })?;
        let s = state.base;
        let fixed = upd(
            model,
            &state.fixed,
            u,
            model.nature_obs(s),
            model.public_obs(s),
            a,
        )?;
        let mut out = Vec::new();
        for next in model.states() {
            let p = model.transition(s, a, next).eval(u);
            if p > Q::zero() {
                out.push((
                    PosgNatureState {
                        base: next,
                        fixed: fixed.clone(),
                        action: Some(a),
                    },
                    p,
                ));
            }
        }
        Ok(out)
    }

    /// Rewards accrue on the agent's move; nature states have zero reward.
    pub fn reward(&self, state: &PosgAgentState, a: ActionId) -> &Q {
        self.model.reward(state.base, a)
    }

    pub fn agent_observation(&self, state: &PosgState) -> PosgAgentObs {
        let base = match state {
            PosgState::Agent(s) => s.base,
            PosgState::Nature(s) => s.base,
        };
        (self.model.agent_obs(base), self.model.public_obs(base))
    }

    pub fn nature_observation(&self, state: &PosgState) -> PosgNatureObs {
        match state {
            PosgState::Agent(s) => (
                self.model.nature_obs(s.base),
                self.model.public_obs(s.base),
                None,
            ),
            PosgState::Nature(s) => (
                self.model.nature_obs(s.base),
                self.model.public_obs(s.base),
                s.action,
            ),
        }
    }

    /// Textual dump of the reachable fragment up to the horizon. Nature's
    /// action space is the (generally infinite) admissible set; expansion
    /// samples its vertices, which the header states.
    pub fn dump_reachable(&self) -> String {
        let model = self.model;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# game fragment: {} rounds, {} order",
            self.horizon,
            self.mode()
        );
        let _ = writeln!(
            out,
            "# nature moves shown are the vertices of the admissible set at each state"
        );
        let fmt_assignment = |u: &Assignment| {
            let vals: Vec<String> = model
                .uncertainty()
                .variables()
                .map(|v| {
                    format!(
                        "{}={}",
                        model.uncertainty().variable_name(v),
                        format_rational(u.get(v))
                    )
                })
                .collect();
            format!("{{{}}}", vals.join(","))
        };
        let fmt_fixed = |fixed: &PartialAssignment| {
            let mut parts = Vec::new();
            for (v, value) in fixed.defined() {
                parts.push(format!(
                    "{}={}",
                    model.uncertainty().variable_name(v),
                    format_rational(value)
                ));
            }
            format!("{{{}}}", parts.join(","))
        };
        let fmt_state = |state: &PosgState| match state {
            PosgState::Agent(s) => {
                let pending = match &s.pending {
                    Some(u) => {
                        let vals: Vec<String> = model
                            .uncertainty()
                            .variables()
                            .map(|v| {
                                format!(
                                    "{}={}",
                                    model.uncertainty().variable_name(v),
                                    format_rational(u.get(v))
                                )
                            })
                            .collect();
                        format!(", pending {{{}}}", vals.join(","))
                    }
                    None => String::new(),
                };
                format!(
                    "agent<{}, {}{}>",
                    model.state_name(s.base),
                    fmt_fixed(&s.fixed),
                    pending
                )
            }
            PosgState::Nature(s) => format!(
                "nature<{}, {}, {}>",
                model.state_name(s.base),
                fmt_fixed(&s.fixed),
                s.action
                    .map(|a| model.action_name(a).to_string())
                    .unwrap_or_else(|| "_".into())
            ),
        };
        let mut seen: BTreeMap<PosgState, usize> = BTreeMap::new();
        let mut frontier = vec![(self.initial_state(), 0usize)];
        seen.insert(self.initial_state(), 0);
        let _ = writeln!(out, "state 0: {}", fmt_state(&self.initial_state()));
        let mut next_id = 1usize;
        while let Some((state, round)) = frontier.pop() {
            if round >= self.horizon {
                continue;
            }
            let id = seen[&state];
            let mut push = |out: &mut String,
                            seen: &mut BTreeMap<PosgState, usize>,
                            frontier: &mut Vec<(PosgState, usize)>,
                            label: String,
                            target: PosgState,
                            round: usize| {
                let tid = match seen.get(&target) {
                    Some(&tid) => tid,
                    None => {
                        let tid = next_id;
                        next_id += 1;
                        seen.insert(target.clone(), tid);
                        let _ = writeln!(out, "state {}: {}", tid, fmt_state(&target));
                        frontier.push((target, round));
                        tid
                    }
                };
                let _ = writeln!(out, "  {} --{}-> {}", id, label, tid);
            };
            match (&state, self.mode()) {
                (PosgState::Agent(s), PlayOrder::AgentFirst) => {
                    for a in model.actions() {
                        let target = PosgState::Nature(self.agent_move(s, a).expect("agent-first"));
                        push(
                            &mut out,
                            &mut seen,
                            &mut frontier,
                            model.action_name(a).to_string(),
                            target,
                            round,
                        );
                    }
                }
                (PosgState::Nature(s), PlayOrder::AgentFirst) => {
                    let admissible = model
                        .uncertainty()
                        .constrain(&s.fixed)
                        .expect("reached states have feasible restrictions");
                    for u in admissible.vertices() {
                        for (target, p) in self.nature_move(s, &u).expect("vertex is admissible") {
                            push(
                                &mut out,
                                &mut seen,
                                &mut frontier,
                                format!("u={} p={}", fmt_assignment(&u), format_rational(&p)),
                                PosgState::Agent(target),
                                round + 1,
                            );
                        }
                    }
                }
                (PosgState::Nature(s), PlayOrder::NatureFirst) => {
                    let admissible = model
                        .uncertainty()
                        .constrain(&s.fixed)
                        .expect("reached states have feasible restrictions");
                    for u in admissible.vertices() {
                        for (target, _) in self.nature_move(s, &u).expect("vertex is admissible") {
                            push(
                                &mut out,
                                &mut seen,
                                &mut frontier,
                                format!("u={}", fmt_assignment(&u)),
                                PosgState::Agent(target),
                                round,
                            );
                        }
                    }
                }
                (PosgState::Agent(s), PlayOrder::NatureFirst) => {
                    for a in model.actions() {
                        for (target, p) in
                            self.agent_move_resolving(s, a).expect("pending assignment")
                        {
                            push(
                                &mut out,
                                &mut seen,
                                &mut frontier,
                                format!("{} p={}", model.action_name(a), format_rational(&p)),
                                PosgState::Nature(target),
                                round + 1,
                            );
                        }
                    }
                }
            }
        }
        out
    }
}

/// A game path; the alternation shape follows the play order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PosgPath {
    AgentFirst {
        initial: PosgAgentState,
        steps: Vec<(ActionId, PosgNatureState, Assignment, PosgAgentState)>,
    },
    NatureFirst {
        initial: PosgNatureState,
        steps: Vec<(Assignment, PosgAgentState, ActionId, PosgNatureState)>,
    },
}

impl PosgPath {
    pub fn len(&self) -> usize {
        match self {
            PosgPath::AgentFirst { steps, .. } => steps.len(),
            PosgPath::NatureFirst { steps, .. } => steps.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Maps a source path into the game, tracking the fixed-variable component.
pub fn map_path(model: &Rpomdp, path: &Path) -> Result<PosgPath, Error> {
    if !crate::trajectories::path_valid(model, path) {
        return Err(Error::Contract("only valid paths map into the game".into()));
    }
    let mut fixed = model.no_restriction();
    let mut current = path.initial;
    match model.play_order() {
        PlayOrder::AgentFirst => {
            let initial = PosgAgentState {
                base: current,
                fixed: fixed.clone(),
                pending: None,
            };
            let mut steps = Vec::new();
            for step in &path.steps {
                let nature_state = PosgNatureState {
                    base: current,
                    fixed: fixed.clone(),
                    action: Some(step.action),
                };
                fixed = upd(
                    model,
                    &fixed,
                    &step.assignment,
                    model.nature_obs(current),
                    model.public_obs(current),
                    step.action,
                )?;
                let agent_state = PosgAgentState {
                    base: step.state,
                    fixed: fixed.clone(),
                    pending: None,
                };
                steps.push((
                    step.action,
                    nature_state,
                    step.assignment.clone(),
                    agent_state,
                ));
                current = step.state;
            }
            Ok(PosgPath::AgentFirst { initial, steps })
        }
        PlayOrder::NatureFirst => {
            let initial = PosgNatureState {
                base: current,
                fixed: fixed.clone(),
                action: None,
            };
            let mut steps = Vec::new();
            for step in &path.steps {
                let agent_state = PosgAgentState {
                    base: current,
                    fixed: fixed.clone(),
                    pending: Some(step.assignment.clone()),
                };
                fixed = upd(
                    model,
                    &fixed,
                    &step.assignment,
                    model.nature_obs(current),
                    model.public_obs(current),
                    step.action,
                )?;
                let nature_state = PosgNatureState {
                    base: step.state,
                    fixed: fixed.clone(),
                    action: Some(step.action),
                };
                steps.push((
                    step.assignment.clone(),
                    agent_state,
                    step.action,
                    nature_state,
                ));
                current = step.state;
            }
            Ok(PosgPath::NatureFirst { initial, steps })
        }
    }
}

/// Inverts [`map_path`], checking that the bookkeeping components match.
pub fn unmap_path(model: &Rpomdp, game_path: &PosgPath) -> Result<Path, Error> {
    let path = match game_path {
        PosgPath::AgentFirst { initial, steps } => Path {
            initial: initial.base,
            steps: steps
                .iter()
                .map(|(a, _, u, g)| PathStep {
                    action: *a,
                    assignment: u.clone(),
                    state: g.base,
                })
                .collect(),
        },
        PosgPath::NatureFirst { initial, steps } => Path {
            initial: initial.base,
            steps: steps
                .iter()
                .map(|(u, _, a, n)| PathStep {
                    action: *a,
                    assignment: u.clone(),
                    state: n.base,
                })
                .collect(),
        },
    };
    let remapped = map_path(model, &path)?;
    if &remapped != game_path {
        return Err(Error::Contract(
            "game path bookkeeping does not match the update discipline".into(),
        ));
    }
    Ok(path)
}

/// A game agent history. Agent-first segments read (state obs, action,
/// post-action obs); nature-first segments read (pre obs, duplicated obs,
/// action). The trailing observation closes the history.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PosgAgentHistory {
    AgentFirst {
        segments: Vec<(PosgAgentObs, ActionId, PosgAgentObs)>,
        last: PosgAgentObs,
    },
    NatureFirst {
        segments: Vec<(PosgAgentObs, PosgAgentObs, ActionId)>,
        last: PosgAgentObs,
    },
}

/// A game nature history. Agent-first segments read (pre obs with blank
/// action slot, post-action obs, assignment); nature-first segments read
/// (obs with the previous action, assignment, post obs with blank slot).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PosgNatureHistory {
    AgentFirst {
        segments: Vec<(PosgNatureObs, PosgNatureObs, Assignment)>,
        last: PosgNatureObs,
    },
    NatureFirst {
        segments: Vec<(PosgNatureObs, Assignment, PosgNatureObs)>,
        last: PosgNatureObs,
    },
}

/// Maps a source agent history into the game view.
pub fn map_agent_history(model: &Rpomdp, h: &AgentHistory) -> PosgAgentHistory {
    let mut obs_seq: Vec<PosgAgentObs> = vec![h.initial];
    obs_seq.extend(h.steps.iter().map(|(_, z)| *z));
    let last = *obs_seq.last().expect("sequence nonempty");
    match model.play_order() {
        PlayOrder::AgentFirst => PosgAgentHistory::AgentFirst {
            segments: h
                .steps
                .iter()
                .enumerate()
                .map(|(k, (a, _))| (obs_seq[k], *a, obs_seq[k]))
                .collect(),
            last,
        },
        PlayOrder::NatureFirst => PosgAgentHistory::NatureFirst {
            segments: h
                .steps
                .iter()
                .enumerate()
                .map(|(k, (a, _))| (obs_seq[k], obs_seq[k], *a))
                .collect(),
            last,
        },
    }
}

/// Inverts [`map_agent_history`], checking the duplicated-observation shape.
pub fn unmap_agent_history(model: &Rpomdp, h: &PosgAgentHistory) -> Result<AgentHistory, Error> {
    let (pairs, last): (Vec<(PosgAgentObs, ActionId)>, PosgAgentObs) = match h {
        PosgAgentHistory::AgentFirst { segments, last } => {
            for (z1, _, z2) in segments {
                if z1 != z2 {
                    return Err(Error::Contract(
                        "agent history segments must duplicate their observation".into(),
                    ));
                }
            }
            (segments.iter().map(|(z, a, _)| (*z, *a)).collect(), *last)
        }
        PosgAgentHistory::NatureFirst { segments, last } => {
            for (z1, z2, _) in segments {
                if z1 != z2 {
                    return Err(Error::Contract(
                        "agent history segments must duplicate their observation".into(),
                    ));
                }
            }
            (segments.iter().map(|(z, _, a)| (*z, *a)).collect(), *last)
        }
    };
    let expected = match model.play_order() {
        PlayOrder::AgentFirst => matches!(h, PosgAgentHistory::AgentFirst { .. }),
        PlayOrder::NatureFirst => matches!(h, PosgAgentHistory::NatureFirst { .. }),
    };
    if !expected {
        return Err(Error::Contract(
            "history shape does not match the play order".into(),
        ));
    }
    let initial = pairs.first().map(|(z, _)| *z).unwrap_or(last);
    let mut steps = Vec::new();
    for (k, (_, a)) in pairs.iter().enumerate() {
        let next_obs = if k + 1 < pairs.len() {
            pairs[k + 1].0
        } else {
            last
        };
        steps.push((*a, next_obs));
    }
    Ok(AgentHistory { initial, steps })
}

/// Maps a source nature history into the game view.
pub fn map_nature_history(model: &Rpomdp, h: &NatureHistory) -> PosgNatureHistory {
    let mut obs_seq: Vec<(NatureObs, PublicObs)> = vec![h.initial];
    obs_seq.extend(h.steps.iter().map(|(_, _, z)| *z));
    match model.play_order() {
        PlayOrder::AgentFirst => {
            let last = obs_seq.last().expect("nonempty").0;
            let last_obs = (last, obs_seq.last().unwrap().1, None);
            PosgNatureHistory::AgentFirst {
                segments: h
                    .steps
                    .iter()
                    .enumerate()
                    .map(|(k, (a, u, _))| {
                        let (zn, zp) = obs_seq[k];
                        ((zn, zp, None), (zn, zp, Some(*a)), u.clone())
                    })
                    .collect(),
                last: last_obs,
            }
        }
        PlayOrder::NatureFirst => {
            let n = h.steps.len();
            let last_pair = obs_seq[n];
            let last = (
                last_pair.0,
                last_pair.1,
                if n == 0 { None } else { Some(h.steps[n - 1].0) },
            );
            PosgNatureHistory::NatureFirst {
                segments: h
                    .steps
                    .iter()
                    .enumerate()
                    .map(|(k, (_, u, _))| {
                        let (zn, zp) = obs_seq[k];
                        let prev = if k == 0 { None } else { Some(h.steps[k - 1].0) };
                        ((zn, zp, prev), u.clone(), (zn, zp, None))
                    })
                    .collect(),
                last,
            }
        }
    }
}

/// Inverts [`map_nature_history`], checking the private structure.
pub fn unmap_nature_history(model: &Rpomdp, h: &PosgNatureHistory) -> Result<NatureHistory, Error> {
    match (model.play_order(), h) {
        (PlayOrder::AgentFirst, PosgNatureHistory::AgentFirst { segments, last }) => {
            if last.2.is_some() {
                return Err(Error::Contract(
                    "an agent-first nature history ends at an agent state".into(),
                ));
            }
            let mut steps = Vec::new();
            for (k, ((zn1, zp1, slot1), (zn2, zp2, slot2), u)) in segments.iter().enumerate() {
                if slot1.is_some() || slot2.is_none() || zn1 != zn2 || zp1 != zp2 {
                    return Err(Error::Contract(
                        "nature history segments must pair a blank and a filled action slot".into(),
                    ));
                }
                let next = if k + 1 < segments.len() {
                    let ((zn, zp, _), _, _) = &segments[k + 1];
                    (*zn, *zp)
                } else {
                    (last.0, last.1)
                };
                steps.push((slot2.expect("checked"), u.clone(), next));
            }
            let initial = segments
                .first()
                .map(|((zn, zp, _), _, _)| (*zn, *zp))
                .unwrap_or((last.0, last.1));
            Ok(NatureHistory { initial, steps })
        }
        (PlayOrder::NatureFirst, PosgNatureHistory::NatureFirst { segments, last }) => {
            let mut steps: Vec<(ActionId, Assignment, (NatureObs, PublicObs))> = Vec::new();
            for (k, ((zn1, zp1, prev), u, (zn2, zp2, blank))) in segments.iter().enumerate() {
                if blank.is_some() || zn1 != zn2 || zp1 != zp2 {
                    return Err(Error::Contract(
                        "nature history segments must close with a blank action slot".into(),
                    ));
                }
                if k == 0 && prev.is_some() {
                    return Err(Error::Contract(
                        "the first segment has no previous action".into(),
                    ));
                }
                // The action of step k appears as the previous-action slot
                // of segment k + 1 (or of the trailing observation).
                let (action_slot, next_pair) = if k + 1 < segments.len() {
                    let ((zn, zp, prev_next), _, _) = &segments[k + 1];
                    (*prev_next, (*zn, *zp))
                } else {
                    (last.2, (last.0, last.1))
                };
                let action = action_slot.ok_or_else(|| {
                    Error::Contract("missing action in the following segment".into())
                })?;
                steps.push((action, u.clone(), next_pair));
            }
            let initial = segments
                .first()
                .map(|((zn, zp, _), _, _)| (*zn, *zp))
                .unwrap_or((last.0, last.1));
            Ok(NatureHistory { initial, steps })
        }
        _ => Err(Error::Contract(
            "history shape does not match the play order".into(),
        )),
    }
}

/// Game policies are tables over game histories. The optional extra
/// observation mirrors the signatures: nature sees the post-action
/// observation in agent-first games; the agent sees the duplicated state
/// observation in nature-first games.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PosgAgentPolicy {
    pub table: BTreeMap<(PosgAgentHistory, Option<PosgAgentObs>), Distribution<ActionId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PosgNaturePolicy {
    pub table: BTreeMap<(PosgNatureHistory, Option<PosgNatureObs>), Distribution<Assignment>>,
}

/// Maps an agent policy table through the history bijection.
pub fn map_agent_policy(model: &Rpomdp, pi: &StochasticAgentPolicy) -> PosgAgentPolicy {
    let table = pi
        .table
        .iter()
        .map(|(h, dist)| {
            let gh = map_agent_history(model, h);
            let extra = match model.play_order() {
                PlayOrder::AgentFirst => None,
                PlayOrder::NatureFirst => Some(match &gh {
                    PosgAgentHistory::NatureFirst { last, .. } => *last,
                    PosgAgentHistory::AgentFirst { last, .. } => *last,
                }),
            };
            ((gh, extra), dist.clone())
        })
        .collect();
    PosgAgentPolicy { table }
}

/// Inverts [`map_agent_policy`] on every stored table entry.
pub fn unmap_agent_policy(
    model: &Rpomdp,
    pi: &PosgAgentPolicy,
) -> Result<StochasticAgentPolicy, Error> {
    let mut table = BTreeMap::new();
    for ((gh, _), dist) in &pi.table {
        table.insert(unmap_agent_history(model, gh)?, dist.clone());
    }
    Ok(StochasticAgentPolicy::new(table))
}

/// Maps a nature policy table through the history bijection.
pub fn map_nature_policy(model: &Rpomdp, theta: &StochasticNaturePolicy) -> PosgNaturePolicy {
    let table = theta
        .table
        .iter()
        .map(|(key, dist)| {
            let gh = map_nature_history(model, &key.history);
            let extra = match model.play_order() {
                PlayOrder::AgentFirst => {
                    let (zn, zp) = key.history.last_obs();
                    Some((zn, zp, key.action))
                }
                PlayOrder::NatureFirst => None,
            };
            ((gh, extra), dist.clone())
        })
        .collect();
    PosgNaturePolicy { table }
}

/// Inverts [`map_nature_policy`] on every stored table entry.
pub fn unmap_nature_policy(
    model: &Rpomdp,
    theta: &PosgNaturePolicy,
) -> Result<StochasticNaturePolicy, Error> {
    let mut table = BTreeMap::new();
    for ((gh, extra), dist) in &theta.table {
        let history = unmap_nature_history(model, gh)?;
        let action = match model.play_order() {
            PlayOrder::AgentFirst => match extra {
                Some((_, _, Some(a))) => Some(*a),
                _ => {
                    return Err(Error::Contract(
                        "agent-first nature entries carry the observed action".into(),
                    ))
                }
            },
            PlayOrder::NatureFirst => None,
        };
        table.insert(crate::policies::NatureKey { history, action }, dist.clone());
    }
    Ok(StochasticNaturePolicy::new(model.play_order(), table))
}

impl PosgAgentPolicy {
    fn dist_at(
        &self,
        history: &PosgAgentHistory,
        extra: Option<PosgAgentObs>,
    ) -> Distribution<ActionId> {
        self.table
            .get(&(history.clone(), extra))
            .cloned()
            .unwrap_or_else(|| Distribution::dirac(ActionId(0)))
    }
}

impl PosgNaturePolicy {
    fn dist_at(
        &self,
        model: &Rpomdp,
        history: &PosgNatureHistory,
        extra: Option<PosgNatureObs>,
        fixed: &PartialAssignment,
    ) -> Result<Distribution<Assignment>, Error> {
        match self.table.get(&(history.clone(), extra)) {
            Some(d) => Ok(d.clone()),
            None => Ok(Distribution::dirac(
                model.uncertainty().constrain(fixed)?.first_vertex()?,
            )),
        }
    }
}

/// Exact finite-horizon value of the game under game policies: expected
/// reward over `horizon` full rounds, enumerated directly on the game's
/// own transition structure.
pub fn posg_value(
    posg: &Posg<'_>,
    pi: &PosgAgentPolicy,
    theta: &PosgNaturePolicy,
    horizon: usize,
) -> Result<Q, Error> {
    let model = posg.model();
    let mut total = Q::zero();
    match posg.mode() {
        PlayOrder::AgentFirst => {
            let g0 = PosgAgentState {
                base: model.initial_state(),
                fixed: model.no_restriction(),
                pending: None,
            };
            let h_a = PosgAgentHistory::AgentFirst {
                segments: Vec::new(),
                last: posg.agent_observation(&PosgState::Agent(g0.clone())),
            };
            let h_n = PosgNatureHistory::AgentFirst {
                segments: Vec::new(),
                last: posg.nature_observation(&PosgState::Agent(g0.clone())),
            };
            agent_first_round(
                posg,
                pi,
                theta,
                &g0,
                &h_a,
                &h_n,
                Q::one(),
                Q::zero(),
                horizon,
                &mut total,
            )?;
        }
        PlayOrder::NatureFirst => {
            let n0 = PosgNatureState {
                base: model.initial_state(),
                fixed: model.no_restriction(),
                action: None,
            };
            let h_a = PosgAgentHistory::NatureFirst {
                segments: Vec::new(),
                last: posg.agent_observation(&PosgState::Nature(n0.clone())),
            };
            let h_n = PosgNatureHistory::NatureFirst {
                segments: Vec::new(),
                last: posg.nature_observation(&PosgState::Nature(n0.clone())),
            };
            nature_first_round(
                posg,
                pi,
                theta,
                &n0,
                &h_a,
                &h_n,
                Q::one(),
                Q::zero(),
                horizon,
                &mut total,
            )?;
        }
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn agent_first_round(
    posg: &Posg<'_>,
    pi: &PosgAgentPolicy,
    theta: &PosgNaturePolicy,
    g: &PosgAgentState,
    h_a: &PosgAgentHistory,
    h_n: &PosgNatureHistory,
    prob: Q,
    acc: Q,
    rounds_left: usize,
    total: &mut Q,
) -> Result<(), Error> {
    if rounds_left == 0 {
        *total += prob * acc;
        return Ok(());
    }
    let model = posg.model();
    let z_a = posg.agent_observation(&PosgState::Agent(g.clone()));
    let z_n_pre = posg.nature_observation(&PosgState::Agent(g.clone()));
    for (a, pa) in pi.dist_at(h_a, None).iter() {
        let nature_state = posg.agent_move(g, *a)?;
        let z_n_post = posg.nature_observation(&PosgState::Nature(nature_state.clone()));
        let reward = posg.reward(g, *a);
        let dist = theta.dist_at(model, h_n, Some(z_n_post), &nature_state.fixed)?;
        for (u, pu) in dist.iter() {
            if !u.agrees(&nature_state.fixed) || !model.uncertainty().contains(u) {
                continue;
            }
            for (g2, pt) in posg.nature_move(&nature_state, u)? {
                let mut h_a2 = match h_a {
                    PosgAgentHistory::AgentFirst { segments, .. } => segments.clone(),
                    _ => unreachable!(),
                };
                h_a2.push((z_a, *a, z_a));
                let h_a2 = PosgAgentHistory::AgentFirst {
                    segments: h_a2,
                    last: posg.agent_observation(&PosgState::Agent(g2.clone())),
                };
                let mut h_n2 = match h_n {
                    PosgNatureHistory::AgentFirst { segments, .. } => segments.clone(),
                    _ => unreachable!(),
                };
                h_n2.push((z_n_pre, z_n_post, u.clone()));
                let h_n2 = PosgNatureHistory::AgentFirst {
                    segments: h_n2,
                    last: posg.nature_observation(&PosgState::Agent(g2.clone())),
                };
                agent_first_round(
                    posg,
                    pi,
                    theta,
                    &g2,
                    &h_a2,
                    &h_n2,
                    &prob * pa * pu * &pt,
                    &acc + reward,
                    rounds_left - 1,
                    total,
                )?;
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn nature_first_round(
    posg: &Posg<'_>,
    pi: &PosgAgentPolicy,
    theta: &PosgNaturePolicy,
    n: &PosgNatureState,
    h_a: &PosgAgentHistory,
    h_n: &PosgNatureHistory,
    prob: Q,
    acc: Q,
    rounds_left: usize,
    total: &mut Q,
) -> Result<(), Error> {
    if rounds_left == 0 {
        *total += prob * acc;
        return Ok(());
    }
    let model = posg.model();
    let z_n = posg.nature_observation(&PosgState::Nature(n.clone()));
    let dist = theta.dist_at(model, h_n, None, &n.fixed)?;
    for (u, pu) in dist.iter() {
        if !u.agrees(&n.fixed) || !model.uncertainty().contains(u) {
            continue;
        }
        let (agent_state, _) = posg
            .nature_move(n, u)?
            .into_iter()
            .next()
            .expect("nature-first hand-off is deterministic");
        let z_a = posg.agent_observation(&PosgState::Agent(agent_state.clone()));
        let z_n_blank = posg.nature_observation(&PosgState::Agent(agent_state.clone()));
        for (a, pa) in pi.dist_at(h_a, Some(z_a)).iter() {
            let reward = posg.reward(&agent_state, *a);
            for (n2, pt) in posg.agent_move_resolving(&agent_state, *a)? {
                let mut segs_a = match h_a {
                    PosgAgentHistory::NatureFirst { segments, .. } => segments.clone(),
                    _ => unreachable!(),
                };
                segs_a.push((z_a, z_a, *a));
                let h_a2 = PosgAgentHistory::NatureFirst {
                    segments: segs_a,
                    last: posg.agent_observation(&PosgState::Nature(n2.clone())),
                };
                let mut segs_n = match h_n {
                    PosgNatureHistory::NatureFirst { segments, .. } => segments.clone(),
                    _ => unreachable!(),
                };
                segs_n.push((z_n, u.clone(), z_n_blank));
                let h_n2 = PosgNatureHistory::NatureFirst {
                    segments: segs_n,
                    last: posg.nature_observation(&PosgState::Nature(n2.clone())),
                };
                nature_first_round(
                    posg,
                    pi,
                    theta,
                    &n2,
                    &h_a2,
                    &h_n2,
                    &prob * pu * pa * &pt,
                    &acc + reward,
                    rounds_left - 1,
                    total,
                )?;
            }
        }
    }
    Ok(())
}
