//! Policies for both players, in stochastic, deterministic, and mixed form.
//!
//! Policies are finite tables over reachable histories. Histories that a
//! table does not list resolve through an explicit fallback: the first
//! action for the agent, the first vertex of the currently admissible set
//! for nature (or, for policies produced by the mixed-to-stochastic
//! conversion, the unconditional mixture of the underlying deterministic
//! policies).
//!
//! Nature's key carries the last agent action exactly when the model is
//! agent-first; one key type with an optional action keeps the two orders
//! uniform.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::Error;
use crate::model::{ActionId, PlayOrder, Rpomdp};
use crate::num::Q;
use crate::trajectories::{fix_for_nature_history, AgentHistory, NatureHistory, Path, PathStep};
use crate::uncertainty::Assignment;

/// A finite probability distribution with strictly positive entries that
/// sum to exactly one. Zero-probability entries are dropped at construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Distribution<T: Ord> {
    entries: Vec<(T, Q)>,
}

impl<T: Ord + Clone> Distribution<T> {
    pub fn new(entries: impl IntoIterator<Item = (T, Q)>) -> Result<Self, Error> {
        let mut map: BTreeMap<T, Q> = BTreeMap::new();
        for (t, p) in entries {
            if p < Q::zero() {
                return Err(Error::Shape("negative probability".into()));
            }
            if !p.is_zero() {
                *map.entry(t).or_insert_with(Q::zero) += p;
            }
        }
        let total: Q = map.values().fold(Q::zero(), |acc, p| acc + p);
        if !total.is_one() {
            return Err(Error::Shape(format!(
                "distribution sums to {} instead of 1",
                crate::num::format_rational(&total)
            )));
        }
        Ok(Distribution {
            entries: map.into_iter().collect(),
        })
    }

    pub fn dirac(t: T) -> Self {
        Distribution {
            entries: vec![(t, Q::one())],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &(T, Q)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().map(|(t, _)| t)
    }

    pub fn prob(&self, t: &T) -> Q {
        self.entries
            .iter()
            .find(|(x, _)| x == t)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Q::zero)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_dirac(&self) -> Option<&T> {
        if self.entries.len() == 1 {
            Some(&self.entries[0].0)
        } else {
            None
        }
    }
}

/// Lookup key for nature's tables: the nature history plus, in agent-first
/// models, the action nature just observed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NatureKey {
    pub history: NatureHistory,
    pub action: Option<ActionId>,
}

impl NatureKey {
    pub fn for_mode(mode: PlayOrder, history: NatureHistory, a: ActionId) -> Self {
        NatureKey {
            history,
            action: match mode {
                PlayOrder::AgentFirst => Some(a),
                PlayOrder::NatureFirst => None,
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StochasticAgentPolicy {
    pub table: BTreeMap<AgentHistory, Distribution<ActionId>>,
}

impl StochasticAgentPolicy {
    pub fn new(table: BTreeMap<AgentHistory, Distribution<ActionId>>) -> Self {
        StochasticAgentPolicy { table }
    }

    /// The action distribution at `h`; unlisted histories fall back to a
    /// point mass on the first action.
    pub fn dist_at(&self, _model: &Rpomdp, h: &AgentHistory) -> Distribution<ActionId> {
        self.table
            .get(h)
            .cloned()
            .unwrap_or_else(|| Distribution::dirac(ActionId(0)))
    }

    pub fn uses_fallback_at(&self, h: &AgentHistory) -> bool {
        !self.table.contains_key(h)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeterministicAgentPolicy {
    pub table: BTreeMap<AgentHistory, ActionId>,
}

impl DeterministicAgentPolicy {
    pub fn new(table: BTreeMap<AgentHistory, ActionId>) -> Self {
        DeterministicAgentPolicy { table }
    }

    pub fn action_at(&self, _model: &Rpomdp, h: &AgentHistory) -> ActionId {
        self.table.get(h).copied().unwrap_or(ActionId(0))
    }

    pub fn as_stochastic(&self) -> StochasticAgentPolicy {
        StochasticAgentPolicy {
            table: self
                .table
                .iter()
                .map(|(h, a)| (h.clone(), Distribution::dirac(*a)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MixedAgentPolicy {
    weights: Distribution<DeterministicAgentPolicy>,
}

impl MixedAgentPolicy {
    pub fn new(weights: Distribution<DeterministicAgentPolicy>) -> Self {
        MixedAgentPolicy { weights }
    }

    pub fn dirac(det: DeterministicAgentPolicy) -> Self {
        MixedAgentPolicy {
            weights: Distribution::dirac(det),
        }
    }

    pub fn support(&self) -> impl Iterator<Item = &(DeterministicAgentPolicy, Q)> {
        self.weights.iter()
    }

    /// Size of the deterministic support; never zero.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// How a stochastic nature policy resolves unlisted histories.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NatureFallback {
    /// The first vertex of the admissible set under the history's fix.
    FirstVertex,
    /// The unconditional mixture of deterministic policies; used by
    /// [`crate::conversions::stochastic_from_mixed`] so that irrelevant
    /// histories keep the mixture's marginal behavior.
    Mixture(Vec<(DeterministicNaturePolicy, Q)>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StochasticNaturePolicy {
    pub mode: PlayOrder,
    pub table: BTreeMap<NatureKey, Distribution<Assignment>>,
    pub fallback: NatureFallback,
}

impl StochasticNaturePolicy {
    pub fn new(mode: PlayOrder, table: BTreeMap<NatureKey, Distribution<Assignment>>) -> Self {
        StochasticNaturePolicy {
            mode,
            table,
            fallback: NatureFallback::FirstVertex,
        }
    }

    pub fn key(&self, h: &NatureHistory, a: ActionId) -> NatureKey {
        NatureKey::for_mode(self.mode, h.clone(), a)
    }

    /// The assignment distribution at the key for `(h, a)`; unlisted keys
    /// resolve through the policy's fallback rule.
    pub fn dist_at(
        &self,
        model: &Rpomdp,
        h: &NatureHistory,
        a: ActionId,
    ) -> Result<Distribution<Assignment>, Error> {
        if let Some(d) = self.table.get(&self.key(h, a)) {
            return Ok(d.clone());
        }
        match &self.fallback {
            NatureFallback::FirstVertex => Ok(Distribution::dirac(first_vertex_for(model, h)?)),
            NatureFallback::Mixture(support) => {
                let mut entries: Vec<(Assignment, Q)> = Vec::new();
                for (det, w) in support {
                    let u = det.choice_at(model, h, a)?;
                    entries.push((u, w.clone()));
                }
                Distribution::new(entries)
            }
        }
    }

    pub fn uses_fallback_at(&self, h: &NatureHistory, a: ActionId) -> bool {
        !self.table.contains_key(&self.key(h, a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeterministicNaturePolicy {
    pub mode: PlayOrder,
    pub table: BTreeMap<NatureKey, Assignment>,
}

impl DeterministicNaturePolicy {
    pub fn new(mode: PlayOrder, table: BTreeMap<NatureKey, Assignment>) -> Self {
        DeterministicNaturePolicy { mode, table }
    }

    pub fn empty(mode: PlayOrder) -> Self {
        Self::new(mode, BTreeMap::new())
    }

    pub fn key(&self, h: &NatureHistory, a: ActionId) -> NatureKey {
        NatureKey::for_mode(self.mode, h.clone(), a)
    }

    pub fn choice_at(
        &self,
        model: &Rpomdp,
        h: &NatureHistory,
        a: ActionId,
    ) -> Result<Assignment, Error> {
        if let Some(u) = self.table.get(&self.key(h, a)) {
            return Ok(u.clone());
        }
        first_vertex_for(model, h)
    }

    pub fn as_stochastic(&self) -> StochasticNaturePolicy {
        StochasticNaturePolicy {
            mode: self.mode,
            table: self
                .table
                .iter()
                .map(|(k, u)| (k.clone(), Distribution::dirac(u.clone())))
                .collect(),
            fallback: NatureFallback::FirstVertex,
        }
    }
}

/// The canonical default choice at a history: the first vertex of the
/// uncertainty set constrained by the history's fixed variables.
pub(crate) fn first_vertex_for(model: &Rpomdp, h: &NatureHistory) -> Result<Assignment, Error> {
    let fixed = fix_for_nature_history(model, h);
    model.uncertainty().constrain(&fixed)?.first_vertex()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MixedNaturePolicy {
    weights: Distribution<DeterministicNaturePolicy>,
}

impl MixedNaturePolicy {
    pub fn new(weights: Distribution<DeterministicNaturePolicy>) -> Self {
        MixedNaturePolicy { weights }
    }

    pub fn dirac(det: DeterministicNaturePolicy) -> Self {
        MixedNaturePolicy {
            weights: Distribution::dirac(det),
        }
    }

    pub fn support(&self) -> impl Iterator<Item = &(DeterministicNaturePolicy, Q)> {
        self.weights.iter()
    }

    /// Size of the deterministic support; never zero.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// An agent policy of any of the three kinds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgentPolicy {
    Stochastic(StochasticAgentPolicy),
    Deterministic(DeterministicAgentPolicy),
    Mixed(MixedAgentPolicy),
}

impl AgentPolicy {
    /// Always plays the first action.
    pub fn first_action() -> Self {
        AgentPolicy::Deterministic(DeterministicAgentPolicy::default())
    }
}

/// A nature policy of any of the three kinds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NaturePolicy {
    Stochastic(StochasticNaturePolicy),
    Deterministic(DeterministicNaturePolicy),
    Mixed(MixedNaturePolicy),
}

impl NaturePolicy {
    /// Always plays the canonical first vertex of the admissible set.
    pub fn first_vertex_everywhere(model: &Rpomdp) -> Self {
        NaturePolicy::Deterministic(DeterministicNaturePolicy::empty(model.play_order()))
    }

    /// The assignments the policy may choose at `(h, a)`. Mixed policies
    /// have no single support per history; callers split them first.
    pub fn support_at(
        &self,
        model: &Rpomdp,
        h: &NatureHistory,
        a: ActionId,
    ) -> Result<Vec<Assignment>, Error> {
        match self {
            NaturePolicy::Deterministic(det) => Ok(vec![det.choice_at(model, h, a)?]),
            NaturePolicy::Stochastic(st) => Ok(st
                .dist_at(model, h, a)?
                .iter()
                .map(|(u, _)| u.clone())
                .collect()),
            NaturePolicy::Mixed(_) => Err(Error::Contract(
                "mixed policies must be split into their deterministic support".into(),
            )),
        }
    }
}

/// True iff every assignment the policy can choose is a member of the
/// uncertainty set and agrees with the variables its history has fixed.
/// A mixed policy is valid iff every supported deterministic policy is.
pub fn policy_valid(model: &Rpomdp, theta: &NaturePolicy) -> bool {
    match theta {
        NaturePolicy::Mixed(mixed) => mixed
            .support()
            .all(|(det, _)| policy_valid(model, &NaturePolicy::Deterministic(det.clone()))),
        NaturePolicy::Deterministic(det) => det.table.iter().all(|(key, u)| {
            let fixed = fix_for_nature_history(model, &key.history);
            model.uncertainty().contains(u) && u.agrees(&fixed)
        }),
        NaturePolicy::Stochastic(st) => st.table.iter().all(|(key, dist)| {
            let fixed = fix_for_nature_history(model, &key.history);
            dist.support()
                .all(|u| model.uncertainty().contains(u) && u.agrees(&fixed))
        }),
    }
}

/// Behavioral view of an agent policy (stochastic or deterministic).
#[derive(Clone, Copy)]
pub(crate) enum AgentView<'a> {
    Stoch(&'a StochasticAgentPolicy),
    Det(&'a DeterministicAgentPolicy),
}

impl<'a> AgentView<'a> {
    pub fn dist(&self, model: &Rpomdp, h: &AgentHistory) -> Vec<(ActionId, Q)> {
        match self {
            AgentView::Stoch(p) => p.dist_at(model, h).iter().cloned().collect(),
            AgentView::Det(p) => vec![(p.action_at(model, h), Q::one())],
        }
    }
}

/// Behavioral view of a nature policy (stochastic or deterministic).
#[derive(Clone, Copy)]
pub(crate) enum NatureView<'a> {
    Stoch(&'a StochasticNaturePolicy),
    Det(&'a DeterministicNaturePolicy),
}

impl<'a> NatureView<'a> {
    pub fn dist(
        &self,
        model: &Rpomdp,
        h: &NatureHistory,
        a: ActionId,
    ) -> Result<Vec<(Assignment, Q)>, Error> {
        match self {
            NatureView::Stoch(p) => Ok(p.dist_at(model, h, a)?.iter().cloned().collect()),
            NatureView::Det(p) => Ok(vec![(p.choice_at(model, h, a)?, Q::one())]),
        }
    }
}

/// A probability distribution over valid paths of one fixed horizon.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathDistribution {
    masses: BTreeMap<Path, Q>,
}

impl PathDistribution {
    pub fn get(&self, path: &Path) -> Q {
        self.masses.get(path).cloned().unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Path, &Q)> {
        self.masses.iter()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total_mass(&self) -> Q {
        self.masses.values().fold(Q::zero(), |acc, p| acc + p)
    }

    fn add(&mut self, path: Path, mass: Q) {
        if !mass.is_zero() {
            *self.masses.entry(path).or_insert_with(Q::zero) += mass;
        }
    }

    fn add_scaled(&mut self, other: &PathDistribution, w: &Q) {
        for (path, mass) in other.iter() {
            self.add(path.clone(), mass * w);
        }
    }
}

/// Walks every positive-probability extension of length `horizon`, calling
/// `visit(path, probability, collected_reward)` at each leaf.
pub(crate) fn walk_paths(
    model: &Rpomdp,
    agent: AgentView<'_>,
    nature: NatureView<'_>,
    horizon: usize,
    visit: &mut impl FnMut(&Path, &Q, &Q),
) -> Result<(), Error> {
    struct Ctx<'m> {
        model: &'m Rpomdp,
        horizon: usize,
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        ctx: &Ctx<'_>,
        agent: AgentView<'_>,
        nature: NatureView<'_>,
        path: &mut Path,
        h_a: &mut AgentHistory,
        h_n: &mut NatureHistory,
        fixed: &crate::uncertainty::PartialAssignment,
        prob: Q,
        reward: Q,
        visit: &mut impl FnMut(&Path, &Q, &Q),
    ) -> Result<(), Error> {
        if path.len() == ctx.horizon {
            visit(path, &prob, &reward);
            return Ok(());
        }
        let model = ctx.model;
        let s = path.last_state();
        let (z_n, z_pub) = (model.nature_obs(s), model.public_obs(s));

        // Expansion order differs by play order only in which key nature's
        // distribution is read at; the joint support is the same product.
        let agent_dist = agent.dist(model, h_a);
        for (a, pa) in &agent_dist {
            if pa.is_zero() {
                continue;
            }
            let nature_dist = nature.dist(model, h_n, *a)?;
            for (u, pu) in &nature_dist {
                if pu.is_zero() || !u.agrees(fixed) || !model.uncertainty().contains(u) {
                    continue;
                }
                let next_fixed = crate::trajectories::upd(model, fixed, u, z_n, z_pub, *a)?;
                let step_reward = model.reward(s, *a);
                for next in model.states() {
                    let p_t = model.transition(s, *a, next).eval(u);
                    if p_t <= Q::zero() {
                        continue;
                    }
                    path.steps.push(PathStep {
                        action: *a,
                        assignment: u.clone(),
                        state: next,
                    });
                    h_a.steps
                        .push((*a, (model.agent_obs(next), model.public_obs(next))));
                    h_n.steps.push((
                        *a,
                        u.clone(),
                        (model.nature_obs(next), model.public_obs(next)),
                    ));
                    recurse(
                        ctx,
                        agent,
                        nature,
                        path,
                        h_a,
                        h_n,
                        &next_fixed,
                        &prob * pa * pu * &p_t,
                        &reward + step_reward,
                        visit,
                    )?;
                    path.steps.pop();
                    h_a.steps.pop();
                    h_n.steps.pop();
                }
            }
        }
        Ok(())
    }

    let ctx = Ctx { model, horizon };
    let s0 = model.initial_state();
    let mut path = Path::start(s0);
    let mut h_a = AgentHistory {
        initial: (model.agent_obs(s0), model.public_obs(s0)),
        steps: Vec::new(),
    };
    let mut h_n = NatureHistory {
        initial: (model.nature_obs(s0), model.public_obs(s0)),
        steps: Vec::new(),
    };
    recurse(
        &ctx,
        agent,
        nature,
        &mut path,
        &mut h_a,
        &mut h_n,
        &model.no_restriction(),
        Q::one(),
        Q::zero(),
        visit,
    )
}

/// The probability the pair `(pi, theta)` assigns to exactly `path`: the
/// product of action, assignment, and transition probabilities along it.
/// Steps that are invalid under the accumulated fix contribute factor zero.
pub fn path_probability(
    model: &Rpomdp,
    pi: &AgentPolicy,
    theta: &NaturePolicy,
    path: &Path,
) -> Result<Q, Error> {
    let agent = match pi {
        AgentPolicy::Stochastic(p) => AgentView::Stoch(p),
        AgentPolicy::Deterministic(p) => AgentView::Det(p),
        AgentPolicy::Mixed(_) => {
            return Err(Error::Contract(
                "path probabilities are defined for stochastic and deterministic policies".into(),
            ))
        }
    };
    let nature = match theta {
        NaturePolicy::Stochastic(p) => NatureView::Stoch(p),
        NaturePolicy::Deterministic(p) => NatureView::Det(p),
        NaturePolicy::Mixed(_) => {
            return Err(Error::Contract(
                "path probabilities are defined for stochastic and deterministic policies".into(),
            ))
        }
    };
    let mut prob = Q::one();
    let mut h_a = AgentHistory {
        initial: (
            model.agent_obs(path.initial),
            model.public_obs(path.initial),
        ),
        steps: Vec::new(),
    };
    let mut h_n = NatureHistory {
        initial: (
            model.nature_obs(path.initial),
            model.public_obs(path.initial),
        ),
        steps: Vec::new(),
    };
    let mut fixed = model.no_restriction();
    let mut current = path.initial;
    for step in &path.steps {
        let pa = agent
            .dist(model, &h_a)
            .into_iter()
            .find(|(a, _)| *a == step.action)
            .map(|(_, p)| p)
            .unwrap_or_else(Q::zero);
        let pu = nature
            .dist(model, &h_n, step.action)?
            .into_iter()
            .find(|(u, _)| *u == step.assignment)
            .map(|(_, p)| p)
            .unwrap_or_else(Q::zero);
        if !step.assignment.agrees(&fixed) || !model.uncertainty().contains(&step.assignment) {
            return Ok(Q::zero());
        }
        let pt = model
            .transition(current, step.action, step.state)
            .eval(&step.assignment);
        prob = prob * pa * pu * pt.clone();
        if prob.is_zero() {
            return Ok(Q::zero());
        }
        fixed = crate::trajectories::upd(
            model,
            &fixed,
            &step.assignment,
            model.nature_obs(current),
            model.public_obs(current),
            step.action,
        )?;
        h_a.steps.push((
            step.action,
            (model.agent_obs(step.state), model.public_obs(step.state)),
        ));
        h_n.steps.push((
            step.action,
            step.assignment.clone(),
            (model.nature_obs(step.state), model.public_obs(step.state)),
        ));
        current = step.state;
    }
    Ok(prob)
}

/// The full distribution over valid length-`horizon` paths under the pair.
/// Mixed policies contribute the weighted sum over their supported
/// deterministic policies.
pub fn path_distribution(
    model: &Rpomdp,
    pi: &AgentPolicy,
    theta: &NaturePolicy,
    horizon: usize,
) -> Result<PathDistribution, Error> {
    match (pi, theta) {
        (AgentPolicy::Mixed(mix), _) => {
            let mut out = PathDistribution::default();
            for (det, w) in mix.support() {
                let inner = path_distribution(
                    model,
                    &AgentPolicy::Deterministic(det.clone()),
                    theta,
                    horizon,
                )?;
                out.add_scaled(&inner, w);
            }
            Ok(out)
        }
        (_, NaturePolicy::Mixed(mix)) => {
            let mut out = PathDistribution::default();
            for (det, w) in mix.support() {
                let inner = path_distribution(
                    model,
                    pi,
                    &NaturePolicy::Deterministic(det.clone()),
                    horizon,
                )?;
                out.add_scaled(&inner, w);
            }
            Ok(out)
        }
        _ => {
            let agent = match pi {
                AgentPolicy::Stochastic(p) => AgentView::Stoch(p),
                AgentPolicy::Deterministic(p) => AgentView::Det(p),
                AgentPolicy::Mixed(_) => unreachable!(),
            };
            let nature = match theta {
                NaturePolicy::Stochastic(p) => NatureView::Stoch(p),
                NaturePolicy::Deterministic(p) => NatureView::Det(p),
                NaturePolicy::Mixed(_) => unreachable!(),
            };
            let mut out = PathDistribution::default();
            walk_paths(model, agent, nature, horizon, &mut |path, prob, _| {
                out.add(path.clone(), prob.clone());
            })?;
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{
        build_benchmark, build_benchmark_variant, nature_policy_from_obs_patterns, BenchmarkId,
        BenchmarkVariant, StickinessKind,
    };
    use crate::num::{q, q_int};
    use crate::trajectories::relevant_histories;

    fn fig2(kind: StickinessKind) -> crate::model::Rpomdp {
        build_benchmark_variant(
            BenchmarkId::Fig2Sticky,
            &BenchmarkVariant {
                stickiness: Some(kind),
                play_order: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_stickiness_tables_into_the_set_are_valid() {
        let model = fig2(StickinessKind::Zero);
        let w = crate::model::PublicObs(0);
        let theta = nature_policy_from_obs_patterns(
            &model,
            2,
            &[(
                vec![w],
                None,
                Distribution::new(vec![
                    (Assignment::new(vec![q(1, 10), q(1, 10)]), q(1, 2)),
                    (Assignment::new(vec![q(9, 10), q(9, 10)]), q(1, 2)),
                ])
                .unwrap(),
            )],
        )
        .unwrap();
        assert!(policy_valid(&model, &NaturePolicy::Stochastic(theta)));
    }

    #[test]
    fn full_stickiness_rejects_later_disagreement() {
        let model = fig2(StickinessKind::Full);
        let root = NatureHistory {
            initial: (
                model.nature_obs(model.initial_state()),
                model.public_obs(model.initial_state()),
            ),
            steps: Vec::new(),
        };
        let u1 = Assignment::new(vec![q(1, 10), q(1, 10)]);
        let u2 = Assignment::new(vec![q(9, 10), q(9, 10)]);
        let mut extended = root.clone();
        let s2 = model.state("s2").unwrap();
        extended.steps.push((
            ActionId(0),
            u1.clone(),
            (model.nature_obs(s2), model.public_obs(s2)),
        ));
        let mut table = BTreeMap::new();
        table.insert(
            NatureKey::for_mode(model.play_order(), root, ActionId(0)),
            u1,
        );
        table.insert(
            NatureKey::for_mode(model.play_order(), extended, ActionId(0)),
            u2,
        );
        let theta = DeterministicNaturePolicy::new(model.play_order(), table);
        assert!(!policy_valid(&model, &NaturePolicy::Deterministic(theta)));
    }

    #[test]
    fn tabulated_zero_stickiness_optimum_is_valid() {
        let model = fig2(StickinessKind::Zero);
        let pair = crate::benchmarks::reference_pair(
            BenchmarkId::Fig2Sticky,
            &BenchmarkVariant {
                stickiness: Some(StickinessKind::Zero),
                play_order: None,
            },
        )
        .unwrap()
        .unwrap();
        assert!(policy_valid(&model, &pair.nature));
    }

    #[test]
    fn empty_path_has_probability_one() {
        let model = build_benchmark(BenchmarkId::Fig2Sticky).unwrap();
        let pi = AgentPolicy::first_action();
        let theta = NaturePolicy::first_vertex_everywhere(&model);
        let path = Path::start(model.initial_state());
        assert_eq!(
            path_probability(&model, &pi, &theta, &path).unwrap(),
            q_int(1)
        );
    }

    #[test]
    fn unsupported_action_kills_the_path() {
        let model = build_benchmark(BenchmarkId::Fig2Sticky).unwrap();
        let pi = AgentPolicy::first_action(); // never plays the second action
        let theta = NaturePolicy::first_vertex_everywhere(&model);
        let path = Path {
            initial: model.initial_state(),
            steps: vec![crate::trajectories::PathStep {
                action: ActionId(1),
                assignment: model.uncertainty().first_vertex().unwrap(),
                state: model.state("s2").unwrap(),
            }],
        };
        assert_eq!(
            path_probability(&model, &pi, &theta, &path).unwrap(),
            q_int(0)
        );
    }

    #[test]
    fn forced_half_branch_has_probability_one_half() {
        let model = build_benchmark(BenchmarkId::Fig2Sticky).unwrap();
        let pi = AgentPolicy::Stochastic({
            let mut table = BTreeMap::new();
            table.insert(
                AgentHistory {
                    initial: (
                        model.agent_obs(model.initial_state()),
                        model.public_obs(model.initial_state()),
                    ),
                    steps: Vec::new(),
                },
                Distribution::new(vec![(ActionId(0), q(1, 2)), (ActionId(1), q(1, 2))]).unwrap(),
            );
            StochasticAgentPolicy::new(table)
        });
        let theta = NaturePolicy::Deterministic({
            let root = NatureHistory {
                initial: (
                    model.nature_obs(model.initial_state()),
                    model.public_obs(model.initial_state()),
                ),
                steps: Vec::new(),
            };
            let mut table = BTreeMap::new();
            table.insert(
                NatureKey::for_mode(model.play_order(), root, ActionId(0)),
                Assignment::new(vec![q(1, 2), q(1, 2)]),
            );
            DeterministicNaturePolicy::new(model.play_order(), table)
        });
        // First step to the lighter branch: 1/2 from the model, and the
        // agent's own uniform pick contributes its half per action.
        let path = Path {
            initial: model.initial_state(),
            steps: vec![crate::trajectories::PathStep {
                action: ActionId(0),
                assignment: Assignment::new(vec![q(1, 2), q(1, 2)]),
                state: model.state("s2").unwrap(),
            }],
        };
        assert_eq!(
            path_probability(&model, &pi, &theta, &path).unwrap(),
            q(1, 4)
        );
        // With the action committed, only the model's half branch remains.
        assert_eq!(
            path_probability(&model, &AgentPolicy::first_action(), &theta, &path).unwrap(),
            q(1, 2)
        );
    }

    #[test]
    fn horizon_zero_distribution_is_a_point_mass() {
        let model = build_benchmark(BenchmarkId::Fig3OrderSmall).unwrap();
        let dist = path_distribution(
            &model,
            &AgentPolicy::first_action(),
            &NaturePolicy::first_vertex_everywhere(&model),
            0,
        )
        .unwrap();
        assert_eq!(dist.len(), 1);
        assert_eq!(dist.get(&Path::start(model.initial_state())), q_int(1));
    }

    #[test]
    fn mixed_distributions_average_pointwise() {
        let model = build_benchmark(BenchmarkId::Fig3OrderSmall).unwrap();
        let root = NatureHistory {
            initial: (
                model.nature_obs(model.initial_state()),
                model.public_obs(model.initial_state()),
            ),
            steps: Vec::new(),
        };
        let mk = |p: Q| {
            let mut table = BTreeMap::new();
            for a in model.actions() {
                table.insert(
                    NatureKey::for_mode(model.play_order(), root.clone(), a),
                    Assignment::new(vec![p.clone()]),
                );
            }
            DeterministicNaturePolicy::new(model.play_order(), table)
        };
        let theta1 = mk(q(1, 10));
        let theta2 = mk(q(9, 10));
        let mix = MixedNaturePolicy::new(
            Distribution::new(vec![(theta1.clone(), q(1, 2)), (theta2.clone(), q(1, 2))]).unwrap(),
        );
        let pi = AgentPolicy::first_action();
        let d1 = path_distribution(&model, &pi, &NaturePolicy::Deterministic(theta1), 2).unwrap();
        let d2 = path_distribution(&model, &pi, &NaturePolicy::Deterministic(theta2), 2).unwrap();
        let dm = path_distribution(&model, &pi, &NaturePolicy::Mixed(mix), 2).unwrap();
        for (path, mass) in dm.iter() {
            let avg = (d1.get(path) + d2.get(path)) / q_int(2);
            assert_eq!(*mass, avg);
        }
    }

    #[test]
    fn relevant_histories_of_a_point_policy_cover_both_actions() {
        let model = fig2(StickinessKind::Full);
        let theta = NaturePolicy::first_vertex_everywhere(&model);
        let rel = relevant_histories(&model, &theta, 1).unwrap();
        // One chosen assignment, both actions, both successor observations.
        assert_eq!(rel.len(), 4);
        for h in &rel {
            assert_eq!(h.len(), 1);
        }
        // A two-point root mixture doubles nothing here: both assignments
        // reach the same two observation classes.
        let root = NatureHistory {
            initial: (
                model.nature_obs(model.initial_state()),
                model.public_obs(model.initial_state()),
            ),
            steps: Vec::new(),
        };
        let mut table = BTreeMap::new();
        for a in model.actions() {
            table.insert(
                NatureKey::for_mode(model.play_order(), root.clone(), a),
                Distribution::new(vec![
                    (Assignment::new(vec![q(1, 10), q(1, 10)]), q(1, 2)),
                    (Assignment::new(vec![q(9, 10), q(9, 10)]), q(1, 2)),
                ])
                .unwrap(),
            );
        }
        let stoch =
            NaturePolicy::Stochastic(StochasticNaturePolicy::new(model.play_order(), table));
        let rel2 = relevant_histories(&model, &stoch, 1).unwrap();
        assert_eq!(rel2.len(), 8);
    }

    #[test]
    fn zero_probability_entries_are_dropped() {
        let d = Distribution::new(vec![(ActionId(0), q(1, 1)), (ActionId(1), q(0, 1))]).unwrap();
        assert_eq!(d.len(), 1);
        assert!(Distribution::new(vec![(ActionId(0), q(1, 2))]).is_err());
        assert!(Distribution::new(vec![(ActionId(0), q(-1, 2)), (ActionId(1), q(3, 2))]).is_err());
    }
}
