//! Best responses and saddle-point search for finite-horizon models.
//!
//! Nature's continuous action space is handled in two regimes. When the
//! value is affine in every decision block (checked symbolically per
//! deterministic agent policy), each best response is exact: minimizing
//! block by block over the vertices of the admissible set. Otherwise the
//! per-block search runs on a grid that always includes the vertices, with
//! local refinement around the incumbent between rounds.
//!
//! The saddle search is a double-oracle loop: solve the finite matrix game
//! over the current candidate sets of deterministic policies exactly, then
//! grow each set with a best response against the opponent's optimal
//! mixture. Certified bounds come from the best responses; the gap is
//! non-increasing across rounds.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::enumerate::enumerate_deterministic_agent_policies;
use crate::error::Error;
use crate::evaluation::value_fh;
use crate::matrix_game::solve_matrix_game;
use crate::model::{ActionId, NatureObs, PlayOrder, PublicObs, Rpomdp, StateId};
use crate::num::{q, Q};
use crate::policies::{
    AgentPolicy, AgentView, DeterministicAgentPolicy, DeterministicNaturePolicy, Distribution,
    MixedAgentPolicy, MixedNaturePolicy, NatureKey, NaturePolicy,
};
use crate::trajectories::{upd, AgentHistory, NatureHistory};
use crate::uncertainty::{Assignment, PartialAssignment};

/// Search parameters; every default is explicit.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Terminate the saddle search once the certified gap is at most this.
    pub tolerance: Q,
    /// Grid points per free variable in the nonlinear regime.
    pub grid_points: usize,
    /// Local grid refinement rounds per best-response call.
    pub max_refinement_rounds: usize,
    /// Upper bound on enumerated deterministic agent policies.
    pub det_policy_cap: u128,
    /// Upper bound on double-oracle rounds.
    pub max_oracle_rounds: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: q(1, 1000),
            grid_points: 5,
            max_refinement_rounds: 6,
            det_policy_cap: 4096,
            max_oracle_rounds: 64,
        }
    }
}

/// Outcome of the saddle search. `lower_value` is certified by
/// `agent_policy` against nature's entire search space; `upper_value` by
/// `nature_policy` against every deterministic agent policy.
#[derive(Debug, Clone)]
pub struct SaddleResult {
    pub lower_value: Q,
    pub upper_value: Q,
    pub gap: Q,
    pub agent_policy: MixedAgentPolicy,
    pub nature_policy: MixedNaturePolicy,
    pub iterations: usize,
    pub grid_resolution: Q,
}

const DETECT_NODE_CAP: usize = 200_000;

// ---------------------------------------------------------------------------
// Symbolic linearity detection
// ---------------------------------------------------------------------------

/// Sparse multivariate polynomial over rationals; monomials are sorted
/// `(indeterminate, power)` lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Poly {
    terms: BTreeMap<Vec<(usize, u32)>, Q>,
}

impl Poly {
    fn constant(c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Poly { terms }
    }

    fn indet(i: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(i, 1)], Q::one());
        Poly { terms }
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_assign(&mut self, other: &Poly) {
        for (m, c) in &other.terms {
            let entry = self.terms.entry(m.clone()).or_insert_with(Q::zero);
            *entry += c;
            if entry.is_zero() {
                self.terms.remove(m);
            }
        }
    }

    fn scaled(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::default();
        }
        Poly {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m: BTreeMap<usize, u32> = m1.iter().copied().collect();
                for (i, p) in m2 {
                    *m.entry(*i).or_insert(0) += p;
                }
                let mono: Vec<(usize, u32)> = m.into_iter().collect();
                let entry = out.terms.entry(mono.clone()).or_insert_with(Q::zero);
                *entry += c1 * c2;
                if entry.is_zero() {
                    out.terms.remove(&mono);
                }
            }
        }
        out
    }
}

fn eval_symbolic(expr: &crate::uncertainty::AffineExpr, u: &[Poly]) -> Poly {
    let mut out = Poly::constant(expr.constant_part().clone());
    for (v, c) in expr.coefficients() {
        out.add_assign(&u[v.0].scaled(c));
    }
    out
}

struct DetectState {
    /// Block owning each indeterminate.
    block_of: Vec<usize>,
    next_block: usize,
    nodes_visited: usize,
}

#[allow(clippy::too_many_arguments)]
fn symbolic_value(
    model: &Rpomdp,
    det: &DeterministicAgentPolicy,
    depth: usize,
    horizon: usize,
    obs: (NatureObs, PublicObs),
    configs: &[(StateId, AgentHistory, Poly)],
    sym_fix: &[Option<Poly>],
    state: &mut DetectState,
) -> Result<Poly, Error> {
    if depth == horizon {
        return Ok(Poly::default());
    }
    state.nodes_visited += 1;
    if state.nodes_visited > DETECT_NODE_CAP {
        return Err(Error::Capacity {
            count: state.nodes_visited as u128,
            cap: DETECT_NODE_CAP as u128,
        });
    }
    let arity = model.uncertainty().arity();
    let (z_n, z_pub) = obs;
    let mut total = Poly::default();
    let mut groups: BTreeMap<ActionId, Vec<(StateId, AgentHistory, Poly)>> = BTreeMap::new();
    for (s, h_a, w) in configs {
        let a = det.action_at(model, h_a);
        total.add_assign(&w.scaled(model.reward(*s, a)));
        groups
            .entry(a)
            .or_default()
            .push((*s, h_a.clone(), w.clone()));
    }
    // One fresh block per decision point: per observed action in
    // agent-first models, per node in nature-first models.
    let mut shared_u: Option<Vec<Poly>> = None;
    for (a, cfgs) in &groups {
        let u: Vec<Poly> = match model.play_order() {
            PlayOrder::NatureFirst => {
                if shared_u.is_none() {
                    shared_u = Some(make_symbolic_assignment(arity, sym_fix, state));
                }
                shared_u.clone().expect("just set")
            }
            PlayOrder::AgentFirst => make_symbolic_assignment(arity, sym_fix, state),
        };
        let sticking = model.sticking_for_observed(z_n, z_pub, *a)?;
        let mut sym_fix2 = sym_fix.to_vec();
        for v in sticking {
            if sym_fix2[v.0].is_none() {
                sym_fix2[v.0] = Some(u[v.0].clone());
            }
        }
        type SymConfigs = Vec<(StateId, AgentHistory, Poly)>;
        let mut children: BTreeMap<(NatureObs, PublicObs), SymConfigs> = BTreeMap::new();
        for (s, h_a, w) in cfgs {
            for next in model.states() {
                let entry = eval_symbolic(model.transition(*s, *a, next), &u);
                if entry.is_zero() {
                    continue;
                }
                let mut h2 = h_a.clone();
                h2.steps
                    .push((*a, (model.agent_obs(next), model.public_obs(next))));
                children
                    .entry((model.nature_obs(next), model.public_obs(next)))
                    .or_default()
                    .push((next, h2, w.mul(&entry)));
            }
        }
        for (child_obs, cfgs2) in children {
            let sub = symbolic_value(
                model,
                det,
                depth + 1,
                horizon,
                child_obs,
                &cfgs2,
                &sym_fix2,
                state,
            )?;
            total.add_assign(&sub);
        }
    }
    Ok(total)
}

fn make_symbolic_assignment(
    arity: usize,
    sym_fix: &[Option<Poly>],
    state: &mut DetectState,
) -> Vec<Poly> {
    let block = state.next_block;
    let mut used_fresh = false;
    let out: Vec<Poly> = (0..arity)
        .map(|i| match &sym_fix[i] {
            Some(p) => p.clone(),
            None => {
                used_fresh = true;
                let indet = state.block_of.len();
                state.block_of.push(block);
                Poly::indet(indet)
            }
        })
        .collect();
    if used_fresh {
        state.next_block += 1;
    }
    out
}

/// True iff, for every deterministic agent policy, the symbolic value is
/// affine in each nature decision block. In that regime a deterministic
/// best response for nature exists on the vertices of the admissible sets.
pub fn detect_nature_linearity(model: &Rpomdp, horizon: usize) -> Result<bool, Error> {
    let dets = enumerate_deterministic_agent_policies(
        model,
        horizon,
        SolverConfig::default().det_policy_cap,
    )?;
    let s0 = model.initial_state();
    for det in &dets {
        let mut state = DetectState {
            block_of: Vec::new(),
            next_block: 0,
            nodes_visited: 0,
        };
        let root_cfg = vec![(
            s0,
            AgentHistory {
                initial: (model.agent_obs(s0), model.public_obs(s0)),
                steps: Vec::new(),
            },
            Poly::constant(Q::one()),
        )];
        let sym_fix = vec![None; model.uncertainty().arity()];
        let value = symbolic_value(
            model,
            det,
            0,
            horizon,
            (model.nature_obs(s0), model.public_obs(s0)),
            &root_cfg,
            &sym_fix,
            &mut state,
        )?;
        for mono in value.terms.keys() {
            let mut per_block: BTreeMap<usize, u32> = BTreeMap::new();
            for (indet, pow) in mono {
                *per_block.entry(state.block_of[*indet]).or_insert(0) += pow;
            }
            if per_block.values().any(|&d| d > 1) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Nature best response
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct GridSpec {
    values: Vec<Vec<Q>>,
}

enum CandidateGen<'g> {
    Vertices,
    Grid(&'g GridSpec),
}

const GRID_PRODUCT_CAP: u128 = 1 << 14;

fn candidate_assignments(
    model: &Rpomdp,
    gen: &CandidateGen<'_>,
    fixed: &PartialAssignment,
) -> Result<Vec<Assignment>, Error> {
    let constrained = model.uncertainty().constrain(fixed)?;
    let mut set: BTreeSet<Vec<Q>> = constrained
        .vertices()
        .into_iter()
        .map(|v| v.values().to_vec())
        .collect();
    if let CandidateGen::Grid(spec) = gen {
        let lists: Vec<Vec<Q>> = model
            .uncertainty()
            .variables()
            .map(|v| match fixed.get(v) {
                Some(x) => vec![x.clone()],
                None => {
                    let (lo, hi) = model.uncertainty().bounds(v);
                    spec.values[v.0]
                        .iter()
                        .filter(|x| *x >= lo && *x <= hi)
                        .cloned()
                        .collect()
                }
            })
            .collect();
        let mut count: u128 = 1;
        for l in &lists {
            count = count.saturating_mul(l.len().max(1) as u128);
        }
        if count > GRID_PRODUCT_CAP {
            return Err(Error::Capacity {
                count,
                cap: GRID_PRODUCT_CAP,
            });
        }
        let mut combo = vec![0usize; lists.len()];
        if lists.iter().all(|l| !l.is_empty()) {
            loop {
                let values: Vec<Q> = lists
                    .iter()
                    .zip(&combo)
                    .map(|(l, &i)| l[i].clone())
                    .collect();
                let cand = Assignment::new(values.clone());
                if constrained.contains(&cand) {
                    set.insert(values);
                }
                let mut i = 0;
                loop {
                    if i == combo.len() {
                        return Ok(set.into_iter().map(Assignment::new).collect());
                    }
                    combo[i] += 1;
                    if combo[i] < lists[i].len() {
                        break;
                    }
                    combo[i] = 0;
                    i += 1;
                }
            }
        }
    }
    Ok(set.into_iter().map(Assignment::new).collect())
}

struct BrCtx<'a, 'm> {
    model: &'m Rpomdp,
    components: &'a [(AgentView<'a>, Q)],
    horizon: usize,
}

type BrConfigs = Vec<(StateId, AgentHistory, usize, Q)>;

fn row_depends_on_free(model: &Rpomdp, s: StateId, a: ActionId, fixed: &PartialAssignment) -> bool {
    model.states().any(|next| {
        model
            .transition(s, a, next)
            .coefficients()
            .any(|(v, _)| !fixed.is_defined(v))
    })
}

fn br_rec(
    ctx: &BrCtx<'_, '_>,
    gen: &CandidateGen<'_>,
    table: &mut BTreeMap<NatureKey, Assignment>,
    configs: &BrConfigs,
    h_n: &mut NatureHistory,
    fixed: &PartialAssignment,
    depth: usize,
) -> Result<Q, Error> {
    if depth == ctx.horizon {
        return Ok(Q::zero());
    }
    let model = ctx.model;
    let (z_n, z_pub) = h_n.last_obs();
    let mut imm = Q::zero();
    let mut groups: BTreeMap<ActionId, BrConfigs> = BTreeMap::new();
    for (s, h_a, i, w) in configs {
        for (a, pa) in ctx.components[*i].0.dist(model, h_a) {
            if pa.is_zero() {
                continue;
            }
            let wa = w * &pa;
            imm += &wa * model.reward(*s, a);
            groups.entry(a).or_default().push((*s, h_a.clone(), *i, wa));
        }
    }

    let expand_choice = |table: &mut BTreeMap<NatureKey, Assignment>,
                         h_n: &mut NatureHistory,
                         a: ActionId,
                         cfgs: &BrConfigs,
                         u: &Assignment,
                         fixed2: &PartialAssignment|
     -> Result<Q, Error> {
        // Successor configs grouped by nature observation; equal latent
        // entries merge.
        type Merged = BTreeMap<(StateId, AgentHistory, usize), Q>;
        let mut children: BTreeMap<(NatureObs, PublicObs), Merged> = BTreeMap::new();
        for (s, h_a, i, w) in cfgs {
            for next in model.states() {
                let pt = model.transition(*s, a, next).eval(u);
                if pt <= Q::zero() {
                    continue;
                }
                let mut h2 = h_a.clone();
                h2.steps
                    .push((a, (model.agent_obs(next), model.public_obs(next))));
                let entry = children
                    .entry((model.nature_obs(next), model.public_obs(next)))
                    .or_default()
                    .entry((next, h2, *i))
                    .or_insert_with(Q::zero);
                *entry += w * &pt;
            }
        }
        let mut value = Q::zero();
        for (child_obs, merged) in children {
            let cfgs2: BrConfigs = merged
                .into_iter()
                .map(|((s, h, i), w)| (s, h, i, w))
                .collect();
            h_n.steps.push((a, u.clone(), child_obs));
            let sub = br_rec(ctx, gen, table, &cfgs2, h_n, fixed2, depth + 1);
            h_n.steps.pop();
            value += sub?;
        }
        Ok(value)
    };

    let mut future = Q::zero();
    match model.play_order() {
        PlayOrder::AgentFirst => {
            for (a, cfgs) in &groups {
                let sticking = model.sticking_for_observed(z_n, z_pub, *a)?;
                let fresh_stick = sticking.iter().any(|v| !fixed.is_defined(*v));
                let matters = fresh_stick
                    || cfgs
                        .iter()
                        .any(|(s, _, _, _)| row_depends_on_free(model, *s, *a, fixed));
                let cands = if matters {
                    candidate_assignments(model, gen, fixed)?
                } else {
                    vec![model.uncertainty().constrain(fixed)?.first_vertex()?]
                };
                let mut best: Option<(Q, Assignment)> = None;
                for u in &cands {
                    let fixed2 = upd(model, fixed, u, z_n, z_pub, *a)?;
                    let val = expand_choice(table, h_n, *a, cfgs, u, &fixed2)?;
                    if best.as_ref().is_none_or(|(b, _)| val < *b) {
                        best = Some((val, u.clone()));
                    }
                }
                let (val, u) = best.expect("candidate set is nonempty");
                if matters && cands.len() > 1 {
                    table.insert(NatureKey::for_mode(model.play_order(), h_n.clone(), *a), u);
                }
                future += val;
            }
        }
        PlayOrder::NatureFirst => {
            let matters = groups.iter().any(|(a, cfgs)| {
                let sticking = model
                    .sticking_for_observed(z_n, z_pub, *a)
                    .expect("observed data in range");
                sticking.iter().any(|v| !fixed.is_defined(*v))
                    || cfgs
                        .iter()
                        .any(|(s, _, _, _)| row_depends_on_free(model, *s, *a, fixed))
            });
            let cands = if matters {
                candidate_assignments(model, gen, fixed)?
            } else {
                vec![model.uncertainty().constrain(fixed)?.first_vertex()?]
            };
            let mut best: Option<(Q, Assignment)> = None;
            for u in &cands {
                let mut val = Q::zero();
                for (a, cfgs) in &groups {
                    let fixed2 = upd(model, fixed, u, z_n, z_pub, *a)?;
                    val += expand_choice(table, h_n, *a, cfgs, u, &fixed2)?;
                }
                if best.as_ref().is_none_or(|(b, _)| val < *b) {
                    best = Some((val, u.clone()));
                }
            }
            if let Some((val, u)) = best {
                if matters && cands.len() > 1 {
                    table.insert(
                        NatureKey::for_mode(model.play_order(), h_n.clone(), ActionId(0)),
                        u,
                    );
                }
                future += val;
            }
        }
    }
    Ok(imm + future)
}

fn run_best_response(
    model: &Rpomdp,
    components: &[(AgentView<'_>, Q)],
    horizon: usize,
    gen: &CandidateGen<'_>,
) -> Result<(DeterministicNaturePolicy, Q), Error> {
    let ctx = BrCtx {
        model,
        components,
        horizon,
    };
    let s0 = model.initial_state();
    let configs: BrConfigs = components
        .iter()
        .enumerate()
        .map(|(i, (_, w))| {
            (
                s0,
                AgentHistory {
                    initial: (model.agent_obs(s0), model.public_obs(s0)),
                    steps: Vec::new(),
                },
                i,
                w.clone(),
            )
        })
        .collect();
    let mut h_n = NatureHistory {
        initial: (model.nature_obs(s0), model.public_obs(s0)),
        steps: Vec::new(),
    };
    let mut table = BTreeMap::new();
    let value = br_rec(
        &ctx,
        gen,
        &mut table,
        &configs,
        &mut h_n,
        &model.no_restriction(),
        0,
    )?;
    Ok((
        DeterministicNaturePolicy::new(model.play_order(), table),
        value,
    ))
}

fn initial_grid(model: &Rpomdp, points: usize) -> (GridSpec, Vec<Q>) {
    let mut values = Vec::new();
    let mut spacing = Vec::new();
    for v in model.uncertainty().variables() {
        let (lo, hi) = model.uncertainty().bounds(v);
        if points < 2 || lo == hi {
            values.push(vec![lo.clone(), hi.clone()]);
            spacing.push(hi - lo);
            continue;
        }
        let step = (hi - lo) / Q::from_integer((points as i64 - 1).into());
        let mut list = Vec::with_capacity(points);
        for i in 0..points {
            list.push(lo + &step * Q::from_integer((i as i64).into()));
        }
        list.dedup();
        values.push(list);
        spacing.push(step);
    }
    (GridSpec { values }, spacing)
}

fn agent_components<'a>(pi: &'a AgentPolicy) -> Vec<(AgentView<'a>, Q)> {
    match pi {
        AgentPolicy::Stochastic(p) => vec![(AgentView::Stoch(p), Q::one())],
        AgentPolicy::Deterministic(p) => vec![(AgentView::Det(p), Q::one())],
        AgentPolicy::Mixed(mix) => mix
            .support()
            .map(|(det, w)| (AgentView::Det(det), w.clone()))
            .collect(),
    }
}

/// Nature's best response to an agent policy: exact over vertices in the
/// affine regime, grid search with local refinement otherwise. The value
/// returned is the exact value of the returned deterministic policy.
pub fn nature_best_response(
    model: &Rpomdp,
    pi: &AgentPolicy,
    horizon: usize,
    config: &SolverConfig,
) -> Result<(NaturePolicy, Q), Error> {
    let (policy, value, _) = nature_best_response_inner(
        model,
        pi,
        horizon,
        config,
        detect_nature_linearity(model, horizon)?,
    )?;
    Ok((NaturePolicy::Deterministic(policy), value))
}

fn nature_best_response_inner(
    model: &Rpomdp,
    pi: &AgentPolicy,
    horizon: usize,
    config: &SolverConfig,
    linear: bool,
) -> Result<(DeterministicNaturePolicy, Q, Q), Error> {
    let components = agent_components(pi);
    if linear {
        let (policy, value) =
            run_best_response(model, &components, horizon, &CandidateGen::Vertices)?;
        return Ok((policy, value, Q::zero()));
    }
    let (mut spec, mut spacing) = initial_grid(model, config.grid_points);
    let (mut best_policy, mut best_value) =
        run_best_response(model, &components, horizon, &CandidateGen::Grid(&spec))?;
    for _ in 0..config.max_refinement_rounds {
        // Refine around every value the incumbent actually uses.
        let mut used: Vec<BTreeSet<Q>> = vec![BTreeSet::new(); model.uncertainty().arity()];
        for u in best_policy.table.values() {
            for v in model.uncertainty().variables() {
                used[v.0].insert(u.get(v).clone());
            }
        }
        for v in model.uncertainty().variables() {
            let (lo, hi) = model.uncertainty().bounds(v);
            let half = &spacing[v.0] / Q::from_integer(2.into());
            if half.is_zero() {
                continue;
            }
            for x in &used[v.0] {
                for cand in [x - &half, x + &half] {
                    if &cand >= lo && &cand <= hi {
                        spec.values[v.0].push(cand);
                    }
                }
            }
            spec.values[v.0].sort();
            spec.values[v.0].dedup();
            spacing[v.0] = half;
        }
        let (policy, value) =
            run_best_response(model, &components, horizon, &CandidateGen::Grid(&spec))?;
        if value < best_value {
            best_policy = policy;
            best_value = value;
        }
    }
    let resolution = spacing.into_iter().min().unwrap_or_else(Q::zero);
    Ok((best_policy, best_value, resolution))
}

/// The agent's exact best response to a nature policy: every deterministic
/// agent policy is evaluated and the argmax returned, ties broken by
/// enumeration order.
pub fn agent_best_response(
    model: &Rpomdp,
    theta: &NaturePolicy,
    horizon: usize,
    config: &SolverConfig,
) -> Result<(AgentPolicy, Q), Error> {
    let dets = enumerate_deterministic_agent_policies(model, horizon, config.det_policy_cap)?;
    let mut best: Option<(DeterministicAgentPolicy, Q)> = None;
    for det in dets {
        let value = value_fh(
            model,
            &AgentPolicy::Deterministic(det.clone()),
            theta,
            horizon,
        )?;
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((det, value));
        }
    }
    let (det, value) = best.expect("at least one policy exists");
    Ok((AgentPolicy::Deterministic(det), value))
}

/// Double-oracle saddle search over growing candidate sets of
/// deterministic policies, with exact matrix-game solves over mixtures.
pub fn solve_saddle(
    model: &Rpomdp,
    horizon: usize,
    config: &SolverConfig,
) -> Result<SaddleResult, Error> {
    let linear = detect_nature_linearity(model, horizon)?;
    let all_agent = enumerate_deterministic_agent_policies(model, horizon, config.det_policy_cap)?;
    let seed_agent = all_agent
        .first()
        .cloned()
        .expect("at least one deterministic policy");

    let mut agent_cands: Vec<DeterministicAgentPolicy> = vec![seed_agent.clone()];
    let (seed_nature, _, _) = nature_best_response_inner(
        model,
        &AgentPolicy::Deterministic(seed_agent),
        horizon,
        config,
        linear,
    )?;
    let mut nature_cands: Vec<DeterministicNaturePolicy> = vec![seed_nature];

    let mut payoffs: BTreeMap<(usize, usize), Q> = BTreeMap::new();
    let payoff = |payoffs: &mut BTreeMap<(usize, usize), Q>,
                  agent_cands: &[DeterministicAgentPolicy],
                  nature_cands: &[DeterministicNaturePolicy],
                  i: usize,
                  j: usize|
     -> Result<Q, Error> {
        if let Some(v) = payoffs.get(&(i, j)) {
            return Ok(v.clone());
        }
        let v = value_fh(
            model,
            &AgentPolicy::Deterministic(agent_cands[i].clone()),
            &NaturePolicy::Deterministic(nature_cands[j].clone()),
            horizon,
        )?;
        payoffs.insert((i, j), v.clone());
        Ok(v)
    };

    let mut best_lower: Option<(Q, MixedAgentPolicy)> = None;
    let mut best_upper: Option<(Q, MixedNaturePolicy)> = None;
    let mut resolution = Q::zero();
    let mut iterations = 0usize;

    for _ in 0..config.max_oracle_rounds {
        iterations += 1;
        let mut matrix = vec![vec![Q::zero(); nature_cands.len()]; agent_cands.len()];
        for (i, row) in matrix.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = payoff(&mut payoffs, &agent_cands, &nature_cands, i, j)?;
            }
        }
        let sol = solve_matrix_game(&matrix)?;
        let agent_mix = MixedAgentPolicy::new(Distribution::new(
            agent_cands
                .iter()
                .cloned()
                .zip(sol.row_strategy.iter().cloned()),
        )?);
        let nature_mix = MixedNaturePolicy::new(Distribution::new(
            nature_cands
                .iter()
                .cloned()
                .zip(sol.col_strategy.iter().cloned()),
        )?);

        let (theta_br, lower, res) = nature_best_response_inner(
            model,
            &AgentPolicy::Mixed(agent_mix.clone()),
            horizon,
            config,
            linear,
        )?;
        resolution = res;
        let (pi_br, upper) = agent_best_response(
            model,
            &NaturePolicy::Mixed(nature_mix.clone()),
            horizon,
            config,
        )?;

        if best_lower.as_ref().is_none_or(|(l, _)| lower > *l) {
            best_lower = Some((lower, agent_mix));
        }
        if best_upper.as_ref().is_none_or(|(u, _)| upper < *u) {
            best_upper = Some((upper, nature_mix));
        }
        let gap =
            &best_upper.as_ref().expect("set above").0 - &best_lower.as_ref().expect("set above").0;
        if gap <= config.tolerance {
            break;
        }

        let pi_det = match pi_br {
            AgentPolicy::Deterministic(d) => d,
            _ => unreachable!("agent best responses are deterministic"),
        };
        let mut grew = false;
        if !nature_cands.contains(&theta_br) {
            nature_cands.push(theta_br);
            grew = true;
        }
        if !agent_cands.contains(&pi_det) {
            agent_cands.push(pi_det);
            grew = true;
        }
        if !grew {
            break;
        }
    }

    let (lower_value, agent_policy) = best_lower.expect("at least one round ran");
    let (upper_value, nature_policy) = best_upper.expect("at least one round ran");
    let gap = &upper_value - &lower_value;
    Ok(SaddleResult {
        lower_value,
        upper_value,
        gap,
        agent_policy,
        nature_policy,
        iterations,
        grid_resolution: resolution,
    })
}
