//! Tabular model-based Bayesian reinforcement learning.
//!
//! Beliefs over transition models are Dirichlet-multinomial pseudo-counts
//! ([`belief`], [`priors`]). Agents ([`agents`]) replan every step with value
//! iteration ([`solver`]) on a model derived from the belief: the posterior
//! mean (EXPLOIT), the posterior mean with a count bonus on rewards (BEB), or
//! an augmented-action model in which each action `(a, sigma)` adds `eta`
//! artificial observations of `(s, a, sigma)` before taking the posterior
//! mean (BOLT). [`oracle`] computes exact Bayes-adaptive values on tiny
//! instances, and [`harness`] runs seeded, parallel Chain experiments.

pub mod agents;
pub mod belief;
pub mod envs;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod oracle;
pub mod par;
pub mod priors;
pub mod solver;

pub use agents::{Agent, AgentConfig, AgentKind, ActionChoice, Episode};
pub use belief::{bayes_update, bolt_transition, expected_model, Belief, BeliefState, ClassMap};
pub use envs::{env_step, load_environment, make_chain, Environment};
pub use error::{Error, Result};
pub use mdp::{TabularMdp, Tensor3};
pub use priors::{PriorFamily, PriorSpec, Skeleton};
pub use solver::{value_iteration, QFunction, Solution, SolverConfig};
