//! Robust POMDPs with explicit uncertainty assumptions.
//!
//! This crate models finite robust POMDPs whose transition probabilities are
//! affine in variables drawn from a polytopic uncertainty set, under an
//! explicit *stickiness* rule (when the adversary's variable choices become
//! fixed) and *order of play* (who moves first each round). It provides:
//!
//! - exact finite-horizon evaluation of policy pairs over rationals,
//! - the equivalent turn-based partially observable stochastic game, with
//!   bijections between paths, histories, and policies of the two views,
//! - conversions between stochastic and mixed policies that preserve the
//!   induced path distribution,
//! - occupancy states as a per-step sufficient statistic, and
//! - a saddle-point solver combining exact best responses with a
//!   double-oracle loop over a growing set of deterministic policies.
//!
//! All probabilities, rewards, and values are exact rationals end to end.
//!
//! ```
//! use rpomdp::benchmarks::{build_benchmark, default_horizon, reference_pair,
//!                          BenchmarkId, BenchmarkVariant};
//! use rpomdp::solver::{solve_saddle, SolverConfig};
//! use rpomdp::{num::q, value_fh};
//!
//! let id = BenchmarkId::Fig3OrderSmall;
//! let model = build_benchmark(id)?;
//! assert!(model.validate().is_valid());
//!
//! let result = solve_saddle(&model, default_horizon(id), &SolverConfig::default())?;
//! assert_eq!(result.lower_value, q(30, 1));
//! assert_eq!(result.gap, q(0, 1));
//!
//! let pair = reference_pair(id, &BenchmarkVariant::default())?.unwrap();
//! let value = value_fh(&model, &pair.agent, &pair.nature, default_horizon(id))?;
//! assert_eq!(value, q(30, 1));
//! # Ok::<(), rpomdp::Error>(())
//! ```

pub mod benchmarks;
pub mod conversions;
pub mod determinize;
pub mod enumerate;
pub mod error;
pub mod evaluation;
pub mod game;
pub mod io;
pub mod matrix_game;
pub mod model;
pub mod num;
pub mod policies;
pub mod solver;
pub mod trajectories;
pub mod uncertainty;

pub use error::Error;
pub use evaluation::{
    belief_for_history, belief_update, expected_reward, occupancy_init, occupancy_next, value_fh,
    Belief, OccupancyState,
};
pub use model::{
    ActionId, AgentObs, NatureObs, PlayOrder, PublicObs, Rpomdp, RpomdpParts, StateId, Stickiness,
    StructureNote, ValidationReport, Violation,
};
pub use num::Q;
pub use policies::{
    path_distribution, path_probability, policy_valid, AgentPolicy, DeterministicAgentPolicy,
    DeterministicNaturePolicy, Distribution, MixedAgentPolicy, MixedNaturePolicy, NatureFallback,
    NatureKey, NaturePolicy, PathDistribution, StochasticAgentPolicy, StochasticNaturePolicy,
};
pub use trajectories::{
    fix, fix_for_nature_history, observe_agent, observe_joint, observe_nature, path_valid,
    relevant_histories, upd, AgentHistory, JointHistory, NatureHistory, ObsTriple, Path, PathStep,
};
pub use uncertainty::{
    agrees, AffineExpr, Assignment, LinearConstraint, PartialAssignment, Relation, UncertaintySet,
    VariableId,
};
