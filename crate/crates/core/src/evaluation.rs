//! Exact finite-horizon evaluation: values, beliefs, and occupancy states.
//!
//! Values are computed by exhaustive enumeration of positive-probability
//! paths, in exact rational arithmetic. The occupancy recursion provides the
//! same totals through a per-step sufficient statistic: a distribution over
//! joint histories paired with the nature-policy prefix that generated it.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::Error;
use crate::model::{ActionId, AgentObs, NatureObs, PublicObs, Rpomdp};
use crate::num::Q;
use crate::policies::{
    policy_valid, AgentPolicy, AgentView, NaturePolicy, NatureView, StochasticAgentPolicy,
    StochasticNaturePolicy,
};
use crate::trajectories::JointHistory;
use crate::uncertainty::Assignment;

/// A distribution over states; sums to exactly one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Belief {
    probs: Vec<Q>,
}

impl Belief {
    /// Point mass on the model's initial state.
    pub fn initial(model: &Rpomdp) -> Self {
        let mut probs = vec![Q::zero(); model.n_states()];
        probs[model.initial_state().0] = Q::one();
        Belief { probs }
    }

    pub fn prob(&self, s: crate::model::StateId) -> &Q {
        &self.probs[s.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (crate::model::StateId, &Q)> {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (crate::model::StateId(i), p))
    }

    pub fn total(&self) -> Q {
        self.probs.iter().fold(Q::zero(), |acc, p| acc + p)
    }
}

/// One exact belief update for action `a`, assignment `u`, and the three
/// observed labels. Errors when the observation has probability zero.
pub fn belief_update(
    model: &Rpomdp,
    b: &Belief,
    a: ActionId,
    u: &Assignment,
    z_a: AgentObs,
    z_n: NatureObs,
    z_pub: PublicObs,
) -> Result<Belief, Error> {
    let mut unnormalized = vec![Q::zero(); model.n_states()];
    let mut total = Q::zero();
    for next in model.states() {
        if model.agent_obs(next) != z_a
            || model.nature_obs(next) != z_n
            || model.public_obs(next) != z_pub
        {
            continue;
        }
        let mut mass = Q::zero();
        for (s, p) in b.iter() {
            if p.is_zero() {
                continue;
            }
            mass += p * model.transition(s, a, next).eval(u);
        }
        total += &mass;
        unnormalized[next.0] = mass;
    }
    if total.is_zero() {
        return Err(Error::ImpossibleObservation);
    }
    Ok(Belief {
        probs: unnormalized.into_iter().map(|m| m / &total).collect(),
    })
}

/// The belief after folding `belief_update` along a joint history.
pub fn belief_for_history(model: &Rpomdp, history: &JointHistory) -> Result<Belief, Error> {
    let mut b = Belief::initial(model);
    for (a, u, z) in &history.steps {
        b = belief_update(model, &b, *a, u, z.agent, z.nature, z.public)?;
    }
    Ok(b)
}

/// The expected total reward over `horizon` steps under the policy pair.
///
/// Supports all combinations of stochastic, deterministic, and mixed
/// policies; mixed policies contribute the weighted sum of their
/// deterministic support.
pub fn value_fh(
    model: &Rpomdp,
    pi: &AgentPolicy,
    theta: &NaturePolicy,
    horizon: usize,
) -> Result<Q, Error> {
    match (pi, theta) {
        (AgentPolicy::Mixed(mix), _) => {
            let mut total = Q::zero();
            for (det, w) in mix.support() {
                total += w * value_fh(
                    model,
                    &AgentPolicy::Deterministic(det.clone()),
                    theta,
                    horizon,
                )?;
            }
            Ok(total)
        }
        (_, NaturePolicy::Mixed(mix)) => {
            let mut total = Q::zero();
            for (det, w) in mix.support() {
                total += w * value_fh(
                    model,
                    pi,
                    &NaturePolicy::Deterministic(det.clone()),
                    horizon,
                )?;
            }
            Ok(total)
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
            let mut total = Q::zero();
            crate::policies::walk_paths(model, agent, nature, horizon, &mut |_, prob, reward| {
                total += prob * reward;
            })?;
            Ok(total)
        }
    }
}

/// Discounted value truncated at `horizon`, with the a-priori tail bound
/// `gamma^horizon * R_max / (1 - gamma)` returned alongside.
pub fn value_dih_truncated(
    model: &Rpomdp,
    pi: &AgentPolicy,
    theta: &NaturePolicy,
    gamma: &Q,
    horizon: usize,
) -> Result<(Q, Q), Error> {
    if gamma <= &Q::zero() || gamma >= &Q::one() {
        return Err(Error::Contract("discount factor must lie in (0, 1)".into()));
    }
    let (pi_sto, theta_sto);
    let (agent, nature) = match (pi, theta) {
        (AgentPolicy::Stochastic(p), NaturePolicy::Stochastic(t)) => {
            (AgentView::Stoch(p), NatureView::Stoch(t))
        }
        (AgentPolicy::Deterministic(p), NaturePolicy::Stochastic(t)) => {
            pi_sto = p.as_stochastic();
            (AgentView::Stoch(&pi_sto), NatureView::Stoch(t))
        }
        (AgentPolicy::Stochastic(p), NaturePolicy::Deterministic(t)) => {
            theta_sto = t.as_stochastic();
            (AgentView::Stoch(p), NatureView::Stoch(&theta_sto))
        }
        (AgentPolicy::Deterministic(p), NaturePolicy::Deterministic(t)) => {
            (AgentView::Det(p), NatureView::Det(t))
        }
        _ => {
            return Err(Error::Contract(
                "discounted evaluation expects stochastic or deterministic policies".into(),
            ))
        }
    };
    let mut total = Q::zero();
    crate::policies::walk_paths(model, agent, nature, horizon, &mut |path, prob, _| {
        let mut discounted = Q::zero();
        let mut factor = Q::one();
        let mut current = path.initial;
        for step in &path.steps {
            discounted += &factor * model.reward(current, step.action);
            factor *= gamma;
            current = step.state;
        }
        total += prob * discounted;
    })?;
    let mut r_max = Q::zero();
    for s in model.states() {
        for a in model.actions() {
            let mag = if model.reward(s, a) < &Q::zero() {
                -model.reward(s, a).clone()
            } else {
                model.reward(s, a).clone()
            };
            if mag > r_max {
                r_max = mag;
            }
        }
    }
    let mut gamma_pow = Q::one();
    for _ in 0..horizon {
        gamma_pow *= gamma;
    }
    let tail = gamma_pow * r_max / (Q::one() - gamma);
    Ok((total, tail))
}

/// A distribution over length-`t` joint histories paired with the nature
/// policy prefix that produced it.
#[derive(Debug, Clone)]
pub struct OccupancyState {
    pub dist: BTreeMap<JointHistory, Q>,
    pub nature_prefix: StochasticNaturePolicy,
    pub len: usize,
}

impl OccupancyState {
    pub fn total_mass(&self) -> Q {
        self.dist.values().fold(Q::zero(), |acc, p| acc + p)
    }
}

/// The occupancy at time zero: a point mass on the empty joint history.
pub fn occupancy_init(model: &Rpomdp) -> OccupancyState {
    let mut dist = BTreeMap::new();
    dist.insert(
        JointHistory {
            initial: crate::trajectories::ObsTriple::of(model, model.initial_state()),
            steps: Vec::new(),
        },
        Q::one(),
    );
    OccupancyState {
        dist,
        nature_prefix: StochasticNaturePolicy::new(model.play_order(), BTreeMap::new()),
        len: 0,
    }
}

/// One step of the occupancy recursion: extends every supported history by
/// the policies at time `t` and reweights by belief, choice, and transition
/// probabilities. The nature prefix is extended by `theta_t`.
pub fn occupancy_next(
    model: &Rpomdp,
    occ: &OccupancyState,
    pi_t: &StochasticAgentPolicy,
    theta_t: &StochasticNaturePolicy,
) -> Result<OccupancyState, Error> {
    if !policy_valid(model, &NaturePolicy::Stochastic(theta_t.clone())) {
        return Err(Error::Contract(
            "nature's step policy violates the accumulated restrictions".into(),
        ));
    }
    let mut dist: BTreeMap<JointHistory, Q> = BTreeMap::new();
    for (h, mass) in &occ.dist {
        if mass.is_zero() {
            continue;
        }
        let b = belief_for_history(model, h)?;
        let h_a = h.agent_part();
        let h_n = h.nature_part();
        let fixed = crate::trajectories::fix_for_nature_history(model, &h_n);
        for (a, pa) in pi_t.dist_at(model, &h_a).iter() {
            for (u, pu) in theta_t.dist_at(model, &h_n, *a)?.iter() {
                if !u.agrees(&fixed) || !model.uncertainty().contains(u) {
                    return Err(Error::Contract(
                        "nature's step policy leaves the admissible set".into(),
                    ));
                }
                for (s, bs) in b.iter() {
                    if bs.is_zero() {
                        continue;
                    }
                    for next in model.states() {
                        let pt = model.transition(s, *a, next).eval(u);
                        if pt.is_zero() {
                            continue;
                        }
                        let mut extended = h.clone();
                        extended.steps.push((
                            *a,
                            u.clone(),
                            crate::trajectories::ObsTriple::of(model, next),
                        ));
                        *dist.entry(extended).or_insert_with(Q::zero) += mass * pa * pu * bs * pt;
                    }
                }
            }
        }
    }
    let mut prefix = occ.nature_prefix.clone();
    for (key, d) in &theta_t.table {
        prefix.table.insert(key.clone(), d.clone());
    }
    Ok(OccupancyState {
        dist,
        nature_prefix: prefix,
        len: occ.len + 1,
    })
}

/// The expected reward collected at the occupancy's time step under `pi_t`.
pub fn expected_reward(
    model: &Rpomdp,
    occ: &OccupancyState,
    pi_t: &StochasticAgentPolicy,
) -> Result<Q, Error> {
    let mut total = Q::zero();
    for (h, mass) in &occ.dist {
        if mass.is_zero() {
            continue;
        }
        let b = belief_for_history(model, h)?;
        let h_a = h.agent_part();
        for (a, pa) in pi_t.dist_at(model, &h_a).iter() {
            for (s, bs) in b.iter() {
                if bs.is_zero() {
                    continue;
                }
                total += model.reward(s, *a) * pa * bs * mass;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{
        build_benchmark, build_benchmark_variant, nature_policy_from_obs_patterns, BenchmarkId,
        BenchmarkVariant,
    };
    use crate::model::PlayOrder;
    use crate::num::{q, q_int};
    use crate::policies::Distribution;

    #[test]
    fn deterministic_step_gives_a_point_belief() {
        let model = build_benchmark(BenchmarkId::Fig3OrderSmall).unwrap();
        let b = Belief::initial(&model);
        // In the win state everything funnels into the sink.
        let win = model.state("r300").unwrap();
        let sink = model.state("r0").unwrap();
        let mut from_win = vec![Q::zero(); model.n_states()];
        from_win[win.0] = Q::one();
        let b_win = Belief { probs: from_win };
        let u = model.uncertainty().first_vertex().unwrap();
        let next = belief_update(
            &model,
            &b_win,
            crate::model::ActionId(0),
            &u,
            model.agent_obs(sink),
            model.nature_obs(sink),
            model.public_obs(sink),
        )
        .unwrap();
        assert_eq!(next.prob(sink), &q_int(1));
        let _ = b;
    }

    #[test]
    fn chain_first_step_conditions_on_the_half_branch() {
        let model = build_benchmark(BenchmarkId::Fig2Sticky).unwrap();
        let b = Belief::initial(&model);
        let u = model.uncertainty().first_vertex().unwrap();
        let s2 = model.state("s2").unwrap();
        let next = belief_update(
            &model,
            &b,
            crate::model::ActionId(0),
            &u,
            model.agent_obs(s2),
            model.nature_obs(s2),
            model.public_obs(s2),
        )
        .unwrap();
        // The posterior is a point mass on the observed branch.
        assert_eq!(next.prob(s2), &q_int(1));
        assert_eq!(next.total(), q_int(1));
    }

    #[test]
    fn impossible_observation_is_an_error() {
        let model = build_benchmark(BenchmarkId::Fig2Sticky).unwrap();
        let b = Belief::initial(&model);
        let u = model.uncertainty().first_vertex().unwrap();
        let s6 = model.state("s6").unwrap();
        // From the start no one-step transition reaches the reward layer.
        let err = belief_update(
            &model,
            &b,
            crate::model::ActionId(0),
            &u,
            model.agent_obs(s6),
            model.nature_obs(s6),
            model.public_obs(s6),
        );
        assert!(matches!(err, Err(Error::ImpossibleObservation)));
    }

    #[test]
    fn committed_adversary_caps_the_order_model_at_thirty() {
        // Punishing each action with its bad branch makes every agent
        // policy worth exactly 30.
        let model = build_benchmark_variant(
            BenchmarkId::Fig3OrderSmall,
            &BenchmarkVariant {
                stickiness: None,
                play_order: Some(PlayOrder::AgentFirst),
            },
        )
        .unwrap();
        let w = crate::model::PublicObs(0);
        let a = crate::model::ActionId(0);
        let b = crate::model::ActionId(1);
        let theta = nature_policy_from_obs_patterns(
            &model,
            2,
            &[
                (
                    vec![w],
                    Some(a),
                    Distribution::dirac(crate::uncertainty::Assignment::new(vec![q(1, 10)])),
                ),
                (
                    vec![w],
                    Some(b),
                    Distribution::dirac(crate::uncertainty::Assignment::new(vec![q(9, 10)])),
                ),
            ],
        )
        .unwrap();
        let theta = crate::policies::NaturePolicy::Stochastic(theta);
        for (p1, p2) in [(q_int(1), q_int(0)), (q(1, 3), q(2, 3)), (q(1, 2), q(1, 2))] {
            let mut table = std::collections::BTreeMap::new();
            table.insert(
                crate::trajectories::AgentHistory {
                    initial: (
                        model.agent_obs(model.initial_state()),
                        model.public_obs(model.initial_state()),
                    ),
                    steps: Vec::new(),
                },
                Distribution::new(vec![(a, p1.clone()), (b, p2.clone())]).unwrap(),
            );
            let pi = crate::policies::AgentPolicy::Stochastic(
                crate::policies::StochasticAgentPolicy::new(table),
            );
            assert_eq!(value_fh(&model, &pi, &theta, 2).unwrap(), q_int(30));
        }
    }

    #[test]
    fn discounted_truncation_reports_a_tail_bound() {
        let model = build_benchmark(BenchmarkId::Fig2Sticky).unwrap();
        let pi = crate::policies::AgentPolicy::first_action();
        let theta = crate::policies::NaturePolicy::first_vertex_everywhere(&model);
        let gamma = q(1, 2);
        let (value, tail) = value_dih_truncated(&model, &pi, &theta, &gamma, 4).unwrap();
        // All reward arrives at step 3, discounted by (1/2)^3; the first
        // action collects 200 on the winning branch and 100 on the other.
        let undiscounted = value_fh(&model, &pi, &theta, 4).unwrap();
        assert_eq!(value, undiscounted / q_int(8));
        // gamma^4 * 200 / (1 - gamma) = 25
        assert_eq!(tail, q_int(25));
    }
}
