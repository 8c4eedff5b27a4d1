//! Built-in benchmark models and their reference optimal values.
//!
//! Each builder reproduces one of the small study models exactly: rewards,
//! fixed branch probabilities, and variable boxes. Reward boxes from the
//! figures become absorbing reward-bearing states; the zero-reward sink
//! doubles as the terminal state. `default_horizon` is the depth at which
//! all reward has been collected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::model::{ActionId, PlayOrder, PublicObs, Rpomdp, RpomdpParts, StateId, Stickiness};
use crate::num::{q, q_int, Q};
use crate::policies::{
    AgentPolicy, Distribution, NatureKey, NaturePolicy, StochasticAgentPolicy,
    StochasticNaturePolicy,
};
use crate::trajectories::{extend_supported, initial_supported, AgentHistory, SupportedHistory};
use crate::uncertainty::{AffineExpr, Assignment, LinearConstraint, UncertaintySet, VariableId};

/// Identifiers of the built-in benchmark models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BenchmarkId {
    Fig1RmdpU1,
    Fig1RmdpU2,
    Fig2Sticky,
    Fig3OrderSmall,
    Fig5ObsStickyLeft,
    Fig5ObsStickyRight,
    AppCObsSticky,
    AppD4Arect,
}

impl BenchmarkId {
    pub fn all() -> [BenchmarkId; 8] {
        [
            BenchmarkId::Fig1RmdpU1,
            BenchmarkId::Fig1RmdpU2,
            BenchmarkId::Fig2Sticky,
            BenchmarkId::Fig3OrderSmall,
            BenchmarkId::Fig5ObsStickyLeft,
            BenchmarkId::Fig5ObsStickyRight,
            BenchmarkId::AppCObsSticky,
            BenchmarkId::AppD4Arect,
        ]
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            BenchmarkId::Fig1RmdpU1 => "fig1_rmdp_u1",
            BenchmarkId::Fig1RmdpU2 => "fig1_rmdp_u2",
            BenchmarkId::Fig2Sticky => "fig2_sticky",
            BenchmarkId::Fig3OrderSmall => "fig3_order_small",
            BenchmarkId::Fig5ObsStickyLeft => "fig5_obs_sticky_left",
            BenchmarkId::Fig5ObsStickyRight => "fig5_obs_sticky_right",
            BenchmarkId::AppCObsSticky => "appC_obs_sticky",
            BenchmarkId::AppD4Arect => "appD4_arect",
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        BenchmarkId::all()
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Shape(format!("unknown benchmark id `{s}`")))
    }
}

/// Stickiness selector for benchmark variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StickinessKind {
    Zero,
    Full,
    ObservationBased,
}

impl FromStr for StickinessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "zero" => Ok(StickinessKind::Zero),
            "full" => Ok(StickinessKind::Full),
            "observation-based" => Ok(StickinessKind::ObservationBased),
            other => Err(Error::Shape(format!("unknown stickiness `{other}`"))),
        }
    }
}

/// Overrides for the default stickiness and play order of a benchmark.
#[derive(Debug, Clone, Copy, Default)]
pub struct BenchmarkVariant {
    pub stickiness: Option<StickinessKind>,
    pub play_order: Option<PlayOrder>,
}

/// Builds a benchmark in its default variant.
pub fn build_benchmark(id: BenchmarkId) -> Result<Rpomdp, Error> {
    build_benchmark_variant(id, &BenchmarkVariant::default())
}

/// The horizon at which the benchmark's rewards have all been collected.
pub fn default_horizon(id: BenchmarkId) -> usize {
    match id {
        BenchmarkId::Fig1RmdpU1 | BenchmarkId::Fig1RmdpU2 => 3,
        BenchmarkId::Fig2Sticky => 4,
        BenchmarkId::Fig3OrderSmall => 2,
        BenchmarkId::Fig5ObsStickyLeft | BenchmarkId::Fig5ObsStickyRight => 3,
        BenchmarkId::AppCObsSticky => 5,
        BenchmarkId::AppD4Arect => 3,
    }
}

struct Builder {
    states: Vec<String>,
    actions: Vec<String>,
    public: Vec<String>,
    state_pub: Vec<usize>,
    initial: usize,
    rewards: Vec<(usize, usize, Q)>,
    trans: Vec<(usize, usize, usize, AffineExpr)>,
    vars: Vec<(String, Q, Q)>,
    couplings: Vec<LinearConstraint>,
}

impl Builder {
    fn new(actions: &[&str]) -> Self {
        Builder {
            states: Vec::new(),
            actions: actions.iter().map(|s| s.to_string()).collect(),
            public: Vec::new(),
            state_pub: Vec::new(),
            initial: 0,
            rewards: Vec::new(),
            trans: Vec::new(),
            vars: Vec::new(),
            couplings: Vec::new(),
        }
    }

    fn state(&mut self, name: &str, public: &str) -> usize {
        let z = match self.public.iter().position(|p| p == public) {
            Some(i) => i,
            None => {
                self.public.push(public.to_string());
                self.public.len() - 1
            }
        };
        self.states.push(name.to_string());
        self.state_pub.push(z);
        self.states.len() - 1
    }

    fn var(&mut self, name: &str, lo: Q, hi: Q) -> VariableId {
        self.vars.push((name.to_string(), lo, hi));
        VariableId(self.vars.len() - 1)
    }

    /// Adds the same transition entry for every action.
    fn t_all(&mut self, s: usize, next: usize, expr: AffineExpr) {
        for a in 0..self.actions.len() {
            self.trans.push((s, a, next, expr.clone()));
        }
    }

    fn t(&mut self, s: usize, a: usize, next: usize, expr: AffineExpr) {
        self.trans.push((s, a, next, expr));
    }

    /// Sets the same reward for every action in `s`.
    fn r_all(&mut self, s: usize, value: Q) {
        for a in 0..self.actions.len() {
            self.rewards.push((s, a, value.clone()));
        }
    }

    fn r(&mut self, s: usize, a: usize, value: Q) {
        self.rewards.push((s, a, value));
    }

    fn finish(self, stickiness: Stickiness, play_order: PlayOrder) -> Result<Rpomdp, Error> {
        let n_states = self.states.len();
        let n_actions = self.actions.len();
        let uncertainty = UncertaintySet::new(
            self.vars.iter().map(|(n, _, _)| n.clone()).collect(),
            self.vars
                .iter()
                .map(|(_, lo, hi)| (lo.clone(), hi.clone()))
                .collect(),
            self.couplings,
        )?;
        let mut rewards = vec![vec![q_int(0); n_actions]; n_states];
        for (s, a, v) in self.rewards {
            rewards[s][a] = v;
        }
        let mut transitions = vec![vec![vec![AffineExpr::zero(); n_states]; n_actions]; n_states];
        for (s, a, next, expr) in self.trans {
            transitions[s][a][next] = transitions[s][a][next].add(&expr);
        }
        Rpomdp::new(RpomdpParts {
            states: self.states,
            actions: self.actions,
            agent_obs_labels: vec!["none".to_string()],
            nature_obs_labels: vec!["none".to_string()],
            public_obs_labels: self.public,
            initial_state: StateId(self.initial),
            obs_agent: vec![crate::model::AgentObs(0); n_states],
            obs_nature: vec![crate::model::NatureObs(0); n_states],
            obs_public: self.state_pub.iter().map(|&z| PublicObs(z)).collect(),
            rewards,
            transitions,
            uncertainty,
            stickiness,
            play_order,
        })
    }
}

fn pick_stickiness(
    requested: Option<StickinessKind>,
    default: StickinessKind,
    influence: impl FnOnce() -> BTreeMap<VariableId, std::collections::BTreeSet<(StateId, ActionId)>>,
) -> Stickiness {
    match requested.unwrap_or(default) {
        StickinessKind::Zero => Stickiness::Zero,
        StickinessKind::Full => Stickiness::Full,
        StickinessKind::ObservationBased => Stickiness::ObservationBased {
            influence: influence(),
        },
    }
}

fn influence_from(
    pairs: &[(VariableId, &[(usize, usize)])],
) -> BTreeMap<VariableId, std::collections::BTreeSet<(StateId, ActionId)>> {
    pairs
        .iter()
        .map(|(v, sa)| {
            (
                *v,
                sa.iter().map(|&(s, a)| (StateId(s), ActionId(a))).collect(),
            )
        })
        .collect()
}

/// Builds a benchmark with explicit stickiness and play-order selection.
pub fn build_benchmark_variant(
    id: BenchmarkId,
    variant: &BenchmarkVariant,
) -> Result<Rpomdp, Error> {
    match id {
        BenchmarkId::Fig1RmdpU1 | BenchmarkId::Fig1RmdpU2 => {
            let mut b = Builder::new(&["a"]);
            let s1 = b.state("s1", "o1");
            let s2 = b.state("s2", "o2");
            let (p, qq) = if id == BenchmarkId::Fig1RmdpU1 {
                (
                    b.var("p", q(1, 10), q(9, 10)),
                    b.var("q", q(1, 10), q(9, 10)),
                )
            } else {
                let p = b.var("p", q(1, 10), q(2, 5));
                let qq = b.var("q", q(1, 5), q(4, 5));
                b.couplings.push(LinearConstraint::new(
                    vec![(qq, q_int(1)), (p, q_int(-2))],
                    crate::uncertainty::Relation::Eq,
                    q_int(0),
                ));
                (p, qq)
            };
            b.t(s1, 0, s2, AffineExpr::var(p));
            b.t(s1, 0, s1, AffineExpr::new(q_int(1), vec![(p, q_int(-1))]));
            b.t(s2, 0, s1, AffineExpr::var(qq));
            b.t(s2, 0, s2, AffineExpr::new(q_int(1), vec![(qq, q_int(-1))]));
            let sticky = pick_stickiness(variant.stickiness, StickinessKind::Zero, || {
                influence_from(&[(p, &[(s1, 0)]), (qq, &[(s2, 0)])])
            });
            b.finish(sticky, variant.play_order.unwrap_or(PlayOrder::AgentFirst))
        }
        BenchmarkId::Fig2Sticky => {
            let mut b = Builder::new(&["a", "b"]);
            let s1 = b.state("s1", "w");
            let s2 = b.state("s2", "l");
            let s3 = b.state("s3", "d");
            let s4 = b.state("s4", "m");
            let s5 = b.state("s5", "m");
            let s6 = b.state("s6", "g");
            let s7 = b.state("s7", "g");
            let s8 = b.state("s8", "g");
            let s9 = b.state("s9", "g");
            let p = b.var("p", q(1, 10), q(9, 10));
            let qq = b.var("q", q(1, 10), q(9, 10));
            b.t_all(s1, s2, AffineExpr::constant(q(1, 2)));
            b.t_all(s1, s3, AffineExpr::constant(q(1, 2)));
            b.t_all(s2, s4, AffineExpr::constant(q(9, 10)));
            b.t_all(s2, s5, AffineExpr::constant(q(1, 10)));
            b.t_all(s3, s5, AffineExpr::one());
            b.t_all(s4, s6, AffineExpr::var(p));
            b.t_all(s4, s7, AffineExpr::new(q_int(1), vec![(p, q_int(-1))]));
            b.t_all(s5, s8, AffineExpr::var(qq));
            b.t_all(s5, s9, AffineExpr::new(q_int(1), vec![(qq, q_int(-1))]));
            // The reward layer absorbs; all reward is collected at depth 3.
            for s in [s6, s7, s8, s9] {
                b.t_all(s, s, AffineExpr::one());
            }
            b.r(s6, 0, q_int(200));
            b.r(s7, 1, q_int(100));
            b.r(s8, 1, q_int(200));
            b.r(s9, 0, q_int(100));
            let sticky = pick_stickiness(variant.stickiness, StickinessKind::Full, || {
                influence_from(&[(p, &[(s4, 0), (s4, 1)]), (qq, &[(s5, 0), (s5, 1)])])
            });
            b.finish(sticky, variant.play_order.unwrap_or(PlayOrder::NatureFirst))
        }
        BenchmarkId::Fig3OrderSmall => {
            let mut b = Builder::new(&["a", "b"]);
            let s1 = b.state("s1", "w");
            let win = b.state("r300", "end");
            let sink = b.state("r0", "end");
            let p = b.var("p", q(1, 10), q(9, 10));
            b.t(s1, 0, win, AffineExpr::var(p));
            b.t(s1, 0, sink, AffineExpr::new(q_int(1), vec![(p, q_int(-1))]));
            b.t(s1, 1, win, AffineExpr::new(q_int(1), vec![(p, q_int(-1))]));
            b.t(s1, 1, sink, AffineExpr::var(p));
            b.t_all(win, sink, AffineExpr::one());
            b.t_all(sink, sink, AffineExpr::one());
            b.r_all(win, q_int(300));
            let sticky = pick_stickiness(variant.stickiness, StickinessKind::Full, || {
                influence_from(&[(p, &[(s1, 0), (s1, 1)])])
            });
            b.finish(sticky, variant.play_order.unwrap_or(PlayOrder::AgentFirst))
        }
        BenchmarkId::Fig5ObsStickyLeft | BenchmarkId::Fig5ObsStickyRight => {
            let mut b = Builder::new(&["a"]);
            let s2_obs = if id == BenchmarkId::Fig5ObsStickyLeft {
                "dark"
            } else {
                "light"
            };
            let s1 = b.state("s1", "light");
            let s2 = b.state("s2", s2_obs);
            let p = b.var("p", q(1, 10), q(9, 10));
            let qq = b.var("q", q(1, 10), q(9, 10));
            b.t(s1, 0, s2, AffineExpr::var(p));
            b.t(s1, 0, s1, AffineExpr::new(q_int(1), vec![(p, q_int(-1))]));
            b.t(s2, 0, s1, AffineExpr::var(qq));
            b.t(s2, 0, s2, AffineExpr::new(q_int(1), vec![(qq, q_int(-1))]));
            let sticky =
                pick_stickiness(variant.stickiness, StickinessKind::ObservationBased, || {
                    influence_from(&[(p, &[(s1, 0)]), (qq, &[(s2, 0)])])
                });
            b.finish(sticky, variant.play_order.unwrap_or(PlayOrder::AgentFirst))
        }
        BenchmarkId::AppCObsSticky => {
            let mut b = Builder::new(&["a", "b"]);
            let s1 = b.state("s1", "w");
            let s2 = b.state("s2", "l");
            let s3 = b.state("s3", "d");
            let s4 = b.state("s4", "m");
            let s5 = b.state("s5", "m");
            let s6 = b.state("s6", "g");
            let s7 = b.state("s7", "g");
            let s8 = b.state("s8", "g");
            let s9 = b.state("s9", "g");
            let r200 = b.state("r200", "end");
            let r100 = b.state("r100", "end");
            let sink = b.state("r0", "end");
            let p = b.var("p", q(1, 10), q(9, 10));
            let qq = b.var("q", q(1, 10), q(9, 10));
            b.t_all(s1, s2, AffineExpr::constant(q(1, 2)));
            b.t_all(s1, s3, AffineExpr::constant(q(1, 2)));
            b.t_all(s2, s4, AffineExpr::constant(q(9, 10)));
            b.t_all(s2, s5, AffineExpr::constant(q(1, 10)));
            b.t_all(s3, s5, AffineExpr::one());
            b.t_all(s4, s6, AffineExpr::var(p));
            b.t_all(s4, s7, AffineExpr::new(q_int(1), vec![(p, q_int(-1))]));
            b.t_all(s5, s8, AffineExpr::var(qq));
            b.t_all(s5, s9, AffineExpr::new(q_int(1), vec![(qq, q_int(-1))]));
            b.t(s6, 0, r200, AffineExpr::one());
            b.t(s6, 1, sink, AffineExpr::one());
            b.t(s7, 0, sink, AffineExpr::one());
            b.t(s7, 1, r100, AffineExpr::one());
            b.t(s8, 0, sink, AffineExpr::one());
            b.t(s8, 1, r200, AffineExpr::one());
            b.t(s9, 0, r200, AffineExpr::var(p));
            b.t(s9, 0, r100, AffineExpr::new(q_int(1), vec![(p, q_int(-1))]));
            b.t(s9, 1, r200, AffineExpr::var(qq));
            b.t(
                s9,
                1,
                sink,
                AffineExpr::new(q_int(1), vec![(qq, q_int(-1))]),
            );
            b.t_all(r200, sink, AffineExpr::one());
            b.t_all(r100, sink, AffineExpr::one());
            b.t_all(sink, sink, AffineExpr::one());
            b.r_all(r200, q_int(200));
            b.r_all(r100, q_int(100));
            let sticky = pick_stickiness(variant.stickiness, StickinessKind::Full, || {
                influence_from(&[
                    (p, &[(s4, 0), (s4, 1), (s9, 0)]),
                    (qq, &[(s5, 0), (s5, 1), (s9, 1)]),
                ])
            });
            b.finish(sticky, variant.play_order.unwrap_or(PlayOrder::NatureFirst))
        }
        BenchmarkId::AppD4Arect => {
            let mut b = Builder::new(&["a", "b"]);
            let s1 = b.state("s1", "w");
            let s2 = b.state("s2", "w");
            let r300 = b.state("r300", "end");
            let r100 = b.state("r100", "end");
            let sink = b.state("r0", "end");
            let p = b.var("p", q(1, 10), q(2, 5));
            let qq = b.var("q", q(1, 10), q(2, 5));
            b.t(s1, 0, r300, AffineExpr::var(p));
            b.t(s1, 0, sink, AffineExpr::new(q_int(1), vec![(p, q_int(-1))]));
            b.t(s1, 1, sink, AffineExpr::var(qq));
            b.t(s1, 1, r100, AffineExpr::new(q(1, 2), vec![(qq, q_int(-1))]));
            b.t(s1, 1, s2, AffineExpr::constant(q(1, 2)));
            b.t(s2, 0, sink, AffineExpr::var(p));
            b.t(s2, 0, r100, AffineExpr::new(q_int(1), vec![(p, q_int(-1))]));
            b.t(s2, 1, r100, AffineExpr::var(qq));
            b.t(
                s2,
                1,
                sink,
                AffineExpr::new(q_int(1), vec![(qq, q_int(-1))]),
            );
            b.t_all(r300, sink, AffineExpr::one());
            b.t_all(r100, sink, AffineExpr::one());
            b.t_all(sink, sink, AffineExpr::one());
            b.r_all(r300, q_int(300));
            b.r_all(r100, q_int(100));
            let sticky = pick_stickiness(variant.stickiness, StickinessKind::Full, || {
                influence_from(&[(p, &[(s1, 0), (s2, 0)]), (qq, &[(s1, 1), (s2, 1)])])
            });
            b.finish(sticky, variant.play_order.unwrap_or(PlayOrder::AgentFirst))
        }
    }
}

/// Builds a stochastic agent policy from rules keyed by the public
/// observation sequence of a history. Histories reachable under the rules
/// (and under every action where no rule applies) are resolved against the
/// first matching rule; unmatched histories are left to the fallback.
pub fn agent_policy_from_obs_patterns(
    model: &Rpomdp,
    horizon: usize,
    rules: &[(Vec<PublicObs>, Distribution<ActionId>)],
) -> Result<StochasticAgentPolicy, Error> {
    fn obs_seq(h: &AgentHistory) -> Vec<PublicObs> {
        let mut out = vec![h.initial.1];
        out.extend(h.steps.iter().map(|(_, (_, z))| *z));
        out
    }
    let mut table: BTreeMap<AgentHistory, Distribution<ActionId>> = BTreeMap::new();
    // Frontier over agent histories with their possible current states.
    let mut frontier: Vec<(AgentHistory, std::collections::BTreeSet<StateId>)> = vec![(
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
        let mut next_frontier = Vec::new();
        for (h, support) in &frontier {
            let seq = obs_seq(h);
            let dist = rules
                .iter()
                .find(|(pat, _)| *pat == seq)
                .map(|(_, d)| d.clone());
            let actions: Vec<ActionId> = match &dist {
                Some(d) => d.support().copied().collect(),
                None => model.actions().collect(),
            };
            if let Some(d) = dist {
                table.insert(h.clone(), d);
            }
            for a in actions {
                let mut by_obs: BTreeMap<
                    (crate::model::AgentObs, PublicObs),
                    std::collections::BTreeSet<StateId>,
                > = BTreeMap::new();
                for &s in support {
                    for nxt in model.states() {
                        if model.possibly_positive(s, a, nxt) {
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
                    next_frontier.push((h2, sup));
                }
            }
        }
        frontier = next_frontier;
    }
    Ok(StochasticAgentPolicy::new(table))
}

/// Builds a stochastic nature policy from rules keyed by the public
/// observation sequence of the nature history plus, for agent-first models,
/// the observed action. Expansion follows the policy's own supported
/// choices; unmatched keys are left to the first-vertex fallback.
pub fn nature_policy_from_obs_patterns(
    model: &Rpomdp,
    horizon: usize,
    rules: &[(Vec<PublicObs>, Option<ActionId>, Distribution<Assignment>)],
) -> Result<StochasticNaturePolicy, Error> {
    let mode = model.play_order();
    let mut table: BTreeMap<NatureKey, Distribution<Assignment>> = BTreeMap::new();
    let mut frontier: Vec<SupportedHistory> = vec![initial_supported(model)];
    for _ in 0..horizon {
        let mut next_frontier = Vec::new();
        for node in &frontier {
            let h_n = node.history.nature_part();
            let mut seq = vec![h_n.initial.1];
            seq.extend(h_n.steps.iter().map(|(_, _, (_, z))| *z));
            for a in model.actions() {
                let rule = rules.iter().find(|(pat, act, _)| {
                    *pat == seq
                        && match (mode, act) {
                            (PlayOrder::AgentFirst, Some(x)) => *x == a,
                            (PlayOrder::AgentFirst, None) => true,
                            (PlayOrder::NatureFirst, _) => true,
                        }
                });
                let dist = match rule {
                    Some((_, _, d)) => {
                        for (u, _) in d.iter() {
                            if !u.agrees(&node.fixed) || !model.uncertainty().contains(u) {
                                return Err(Error::InvalidChoice);
                            }
                        }
                        let key = NatureKey::for_mode(mode, h_n.clone(), a);
                        table.insert(key, d.clone());
                        d.clone()
                    }
                    None => Distribution::dirac(
                        model.uncertainty().constrain(&node.fixed)?.first_vertex()?,
                    ),
                };
                for (u, _) in dist.iter() {
                    next_frontier.extend(extend_supported(model, node, a, u));
                }
            }
        }
        // Deduplicate nodes that share history and support.
        next_frontier.sort_by(|x, y| x.history.cmp(&y.history));
        next_frontier.dedup_by(|x, y| x.history == y.history && x.support == y.support);
        frontier = next_frontier;
    }
    Ok(StochasticNaturePolicy::new(mode, table))
}

/// A reference optimal policy pair together with the value it attains.
#[derive(Debug, Clone)]
pub struct ReferencePair {
    pub agent: AgentPolicy,
    pub nature: NaturePolicy,
    pub value: Q,
}

/// The tabulated optimal pair for a benchmark variant, when one is known.
pub fn reference_pair(
    id: BenchmarkId,
    variant: &BenchmarkVariant,
) -> Result<Option<ReferencePair>, Error> {
    let model = build_benchmark_variant(id, variant)?;
    let horizon = default_horizon(id);
    let pub_obs = |label: &str| -> PublicObs {
        PublicObs(
            model
                .public_obs_labels()
                .iter()
                .position(|l| l == label)
                .expect("benchmark observation label"),
        )
    };
    let asg = |pv: Q, qv: Q| Assignment::new(vec![pv, qv]);
    let a = ActionId(0);
    let bb = ActionId(1);

    let pair = match id {
        BenchmarkId::Fig2Sticky => {
            let (w, l, d, m, g) = (
                pub_obs("w"),
                pub_obs("l"),
                pub_obs("d"),
                pub_obs("m"),
                pub_obs("g"),
            );
            match variant.stickiness.unwrap_or(StickinessKind::Full) {
                StickinessKind::Full => {
                    let agent = agent_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[
                            (
                                vec![w, l, m, g],
                                Distribution::new(vec![(a, q(1, 3)), (bb, q(2, 3))])?,
                            ),
                            (
                                vec![w, d, m, g],
                                Distribution::new(vec![(a, q(7, 10)), (bb, q(3, 10))])?,
                            ),
                        ],
                    )?;
                    let nature = nature_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[(vec![w], None, Distribution::dirac(asg(q(1, 3), q(1, 3))))],
                    )?;
                    Some(ReferencePair {
                        agent: AgentPolicy::Stochastic(agent),
                        nature: NaturePolicy::Stochastic(nature),
                        value: q(200, 3),
                    })
                }
                StickinessKind::Zero => {
                    let agent = agent_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[
                            (
                                vec![w, l, m, g],
                                Distribution::new(vec![(a, q(1, 3)), (bb, q(2, 3))])?,
                            ),
                            (
                                vec![w, d, m, g],
                                Distribution::new(vec![(a, q(2, 3)), (bb, q(1, 3))])?,
                            ),
                        ],
                    )?;
                    let nature = nature_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[
                            (
                                vec![w, l, m],
                                None,
                                Distribution::dirac(asg(q(83, 270), q(1, 10))),
                            ),
                            (
                                vec![w, d, m],
                                None,
                                Distribution::dirac(asg(q(1, 10), q(1, 3))),
                            ),
                        ],
                    )?;
                    Some(ReferencePair {
                        agent: AgentPolicy::Stochastic(agent),
                        nature: NaturePolicy::Stochastic(nature),
                        value: q(131, 2),
                    })
                }
                StickinessKind::ObservationBased => None,
            }
        }
        BenchmarkId::Fig3OrderSmall => {
            let w = pub_obs("w");
            match variant.play_order.unwrap_or(PlayOrder::AgentFirst) {
                PlayOrder::AgentFirst => {
                    let nature = nature_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[
                            (
                                vec![w],
                                Some(a),
                                Distribution::dirac(Assignment::new(vec![q(1, 10)])),
                            ),
                            (
                                vec![w],
                                Some(bb),
                                Distribution::dirac(Assignment::new(vec![q(9, 10)])),
                            ),
                        ],
                    )?;
                    Some(ReferencePair {
                        agent: AgentPolicy::first_action(),
                        nature: NaturePolicy::Stochastic(nature),
                        value: q_int(30),
                    })
                }
                PlayOrder::NatureFirst => {
                    let agent = agent_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[(
                            vec![w],
                            Distribution::new(vec![(a, q(1, 2)), (bb, q(1, 2))])?,
                        )],
                    )?;
                    let nature = nature_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[(
                            vec![w],
                            None,
                            Distribution::dirac(Assignment::new(vec![q(1, 2)])),
                        )],
                    )?;
                    Some(ReferencePair {
                        agent: AgentPolicy::Stochastic(agent),
                        nature: NaturePolicy::Stochastic(nature),
                        value: q_int(150),
                    })
                }
            }
        }
        BenchmarkId::AppD4Arect => {
            let w = pub_obs("w");
            match variant.play_order.unwrap_or(PlayOrder::AgentFirst) {
                PlayOrder::AgentFirst => {
                    let agent = agent_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[
                            (vec![w], Distribution::dirac(bb)),
                            (vec![w, w], Distribution::dirac(a)),
                        ],
                    )?;
                    let nature = nature_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[
                            (
                                vec![w],
                                Some(a),
                                Distribution::dirac(asg(q(1, 10), q(1, 10))),
                            ),
                            (
                                vec![w],
                                Some(bb),
                                Distribution::dirac(asg(q(2, 5), q(2, 5))),
                            ),
                        ],
                    )?;
                    Some(ReferencePair {
                        agent: AgentPolicy::Stochastic(agent),
                        nature: NaturePolicy::Stochastic(nature),
                        value: q_int(40),
                    })
                }
                PlayOrder::NatureFirst => {
                    let agent = agent_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[
                            (
                                vec![w],
                                Distribution::new(vec![(a, q(1, 7)), (bb, q(6, 7))])?,
                            ),
                            (vec![w, w], Distribution::dirac(a)),
                        ],
                    )?;
                    let nature = nature_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[(vec![w], None, Distribution::dirac(asg(q(6, 35), q(2, 5))))],
                    )?;
                    Some(ReferencePair {
                        agent: AgentPolicy::Stochastic(agent),
                        nature: NaturePolicy::Stochastic(nature),
                        value: q(360, 7),
                    })
                }
            }
        }
        BenchmarkId::AppCObsSticky => {
            let (w, l, d, m, g) = (
                pub_obs("w"),
                pub_obs("l"),
                pub_obs("d"),
                pub_obs("m"),
                pub_obs("g"),
            );
            match variant.stickiness.unwrap_or(StickinessKind::Full) {
                StickinessKind::Full => {
                    let agent = agent_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[
                            (
                                vec![w, l, m, g],
                                Distribution::new(vec![(a, q(17, 117)), (bb, q(100, 117))])?,
                            ),
                            (
                                vec![w, d, m, g],
                                Distribution::new(vec![(a, q(643, 1170)), (bb, q(527, 1170))])?,
                            ),
                        ],
                    )?;
                    let nature = nature_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[(
                            vec![w],
                            None,
                            Distribution::new(vec![
                                (asg(q(1, 10), q(1, 10)), q(17, 24)),
                                (asg(q(9, 10), q(1, 10)), q(3, 104)),
                                (asg(q(9, 10), q(9, 10)), q(41, 156)),
                            ])?,
                        )],
                    )?;
                    Some(ReferencePair {
                        agent: AgentPolicy::Stochastic(agent),
                        nature: NaturePolicy::Stochastic(nature),
                        value: q(28871, 390),
                    })
                }
                StickinessKind::ObservationBased => {
                    let agent = agent_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[
                            (
                                vec![w, l, m, g],
                                Distribution::new(vec![(a, q(10, 31)), (bb, q(21, 31))])?,
                            ),
                            (
                                vec![w, d, m, g],
                                Distribution::new(vec![(a, q(20, 31)), (bb, q(11, 31))])?,
                            ),
                        ],
                    )?;
                    let nature = nature_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[
                            (
                                vec![w, l, m],
                                None,
                                Distribution::new(vec![
                                    (asg(q(1, 10), q(1, 10)), q(1663, 2232)),
                                    (asg(q(9, 10), q(1, 10)), q(569, 2232)),
                                ])?,
                            ),
                            (
                                vec![w, d, m],
                                None,
                                Distribution::new(vec![
                                    (asg(q(1, 10), q(1, 10)), q(187, 248)),
                                    (asg(q(1, 10), q(9, 10)), q(61, 248)),
                                ])?,
                            ),
                        ],
                    )?;
                    Some(ReferencePair {
                        agent: AgentPolicy::Stochastic(agent),
                        nature: NaturePolicy::Stochastic(nature),
                        value: q(719, 10),
                    })
                }
                StickinessKind::Zero => {
                    let agent = agent_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[
                            (
                                vec![w, l, m, g],
                                Distribution::new(vec![(a, q(1, 3)), (bb, q(2, 3))])?,
                            ),
                            (
                                vec![w, d, m, g],
                                Distribution::new(vec![(a, q(18, 29)), (bb, q(11, 29))])?,
                            ),
                        ],
                    )?;
                    let nature = nature_policy_from_obs_patterns(
                        &model,
                        horizon,
                        &[
                            (
                                vec![w, l, m],
                                None,
                                Distribution::new(vec![
                                    (asg(q(1, 10), q(1, 10)), q(1591, 2160)),
                                    (asg(q(9, 10), q(1, 10)), q(569, 2160)),
                                ])?,
                            ),
                            (
                                vec![w, d, m],
                                None,
                                Distribution::new(vec![
                                    (asg(q(1, 10), q(1, 10)), q(171, 232)),
                                    (asg(q(1, 10), q(9, 10)), q(61, 232)),
                                ])?,
                            ),
                            (
                                vec![w, l, m, g],
                                None,
                                Distribution::dirac(asg(q(1, 10), q(1, 10))),
                            ),
                            (
                                vec![w, d, m, g],
                                None,
                                Distribution::dirac(asg(q(1, 10), q(1, 10))),
                            ),
                        ],
                    )?;
                    Some(ReferencePair {
                        agent: AgentPolicy::Stochastic(agent),
                        nature: NaturePolicy::Stochastic(nature),
                        value: q(24655, 348),
                    })
                }
            }
        }
        _ => None,
    };
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_ids_round_trip() {
        for id in BenchmarkId::all() {
            assert_eq!(id.as_str().parse::<BenchmarkId>().unwrap(), id);
        }
    }

    #[test]
    fn all_benchmarks_validate_cleanly() {
        for id in BenchmarkId::all() {
            let model = build_benchmark(id).unwrap();
            let report = model.validate();
            assert!(report.is_valid(), "{id}: {:?}", report.violations);
        }
    }

    #[test]
    fn fig2_shape_matches_the_figure() {
        let model = build_benchmark(BenchmarkId::Fig2Sticky).unwrap();
        assert_eq!(model.n_states(), 9);
        let mut rewards: Vec<Q> = Vec::new();
        for s in model.states() {
            for a in model.actions() {
                if !rewards.contains(model.reward(s, a)) {
                    rewards.push(model.reward(s, a).clone());
                }
            }
        }
        rewards.sort();
        assert_eq!(rewards, vec![q_int(0), q_int(100), q_int(200)]);
        let p = model.uncertainty().variable("p").unwrap();
        assert_eq!(model.uncertainty().bounds(p), (&q(1, 10), &q(9, 10)));
    }

    #[test]
    fn fig3_shape_matches_the_figure() {
        let model = build_benchmark(BenchmarkId::Fig3OrderSmall).unwrap();
        let mut rewards: Vec<Q> = Vec::new();
        for s in model.states() {
            for a in model.actions() {
                if !rewards.contains(model.reward(s, a)) {
                    rewards.push(model.reward(s, a).clone());
                }
            }
        }
        rewards.sort();
        assert_eq!(rewards, vec![q_int(0), q_int(300)]);
    }

    #[test]
    fn app_d4_shape_matches_the_figure() {
        let model = build_benchmark(BenchmarkId::AppD4Arect).unwrap();
        let p = model.uncertainty().variable("p").unwrap();
        let qq = model.uncertainty().variable("q").unwrap();
        assert_eq!(model.uncertainty().bounds(p), (&q(1, 10), &q(2, 5)));
        assert_eq!(model.uncertainty().bounds(qq), (&q(1, 10), &q(2, 5)));
        // The 1/2 - q branch exists out of (s1, b).
        let s1 = model.state("s1").unwrap();
        let r100 = model.state("r100").unwrap();
        let b = model.action("b").unwrap();
        let expr = model.transition(s1, b, r100);
        assert_eq!(expr.constant_part(), &q(1, 2));
        assert_eq!(expr.coefficient(qq), q_int(-1));
    }

    #[test]
    fn fig1_u2_vertices() {
        let model = build_benchmark(BenchmarkId::Fig1RmdpU2).unwrap();
        let vs = model.uncertainty().vertices();
        assert_eq!(vs.len(), 2);
        assert_eq!(vs[0].values(), &[q(1, 10), q(1, 5)]);
        assert_eq!(vs[1].values(), &[q(2, 5), q(4, 5)]);
    }
}
