//! Discounted value iteration over tabular planning models.
//!
//! [`PlanningMdp`] is a compact per-state action list in which every action
//! carries its own sparse outcome row. It covers the plain expected model, the
//! bonus-augmented model and the optimistic augmented-action model whose
//! actions are `(a, sigma)` pairs and whose width may vary per state.

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, Tensor3};

/// Relative tolerance under which two Q-values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub discount: f64,
    /// Sup-norm stopping threshold.
    pub stop_eps: f64,
    pub max_iters: usize,
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            discount: 0.95,
            stop_eps: 0.01,
            max_iters: 10_000,
            warm_start: None,
        }
    }
}

impl SolverConfig {
    pub fn new(discount: f64, stop_eps: f64) -> Self {
        SolverConfig {
            discount,
            stop_eps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::InvalidArgument(format!("discount {} not in [0, 1)", self.discount)));
        }
        if !(self.stop_eps > 0.0) {
            return Err(Error::InvalidArgument(format!("stop_eps {} must be > 0", self.stop_eps)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Planning model with per-state action lists and sparse outcome rows.
#[derive(Debug, Clone, Default)]
pub struct PlanningMdp {
    n_states: usize,
    state_start: Vec<usize>,
    base_action: Vec<usize>,
    sigma: Vec<Option<usize>>,
    outcome_start: Vec<usize>,
    next: Vec<usize>,
    prob: Vec<f64>,
    reward: Vec<f64>,
}

impl PlanningMdp {
    fn with_states(n_states: usize) -> Self {
        PlanningMdp {
            n_states,
            state_start: vec![0],
            outcome_start: vec![0],
            ..Default::default()
        }
    }

    /// Appends an action to the state currently being built. Zero-probability
    /// outcomes are dropped.
    fn push_action(&mut self, base: usize, sigma: Option<usize>, row: &[f64], reward: impl Fn(usize) -> f64) {
        for (s2, &p) in row.iter().enumerate() {
            if p > 0.0 {
                self.next.push(s2);
                self.prob.push(p);
                self.reward.push(reward(s2));
            }
        }
        self.base_action.push(base);
        self.sigma.push(sigma);
        self.outcome_start.push(self.next.len());
    }

    fn end_state(&mut self) {
        self.state_start.push(self.base_action.len());
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Total number of (possibly augmented) actions over all states.
    pub fn n_actions_total(&self) -> usize {
        self.base_action.len()
    }

    /// Global indices of the actions available at `s`.
    #[inline]
    pub fn actions_of(&self, s: usize) -> std::ops::Range<usize> {
        self.state_start[s]..self.state_start[s + 1]
    }

    pub fn base_action(&self, k: usize) -> usize {
        self.base_action[k]
    }

    /// Optimistic target successor of an augmented action.
    pub fn sigma(&self, k: usize) -> Option<usize> {
        self.sigma[k]
    }

    /// `(next_state, probability, reward)` triples of action `k`.
    pub fn outcomes(&self, k: usize) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let r = self.outcome_start[k]..self.outcome_start[k + 1];
        r.map(move |i| (self.next[i], self.prob[i], self.reward[i]))
    }

    #[inline]
    fn backup(&self, k: usize, discount: f64, v: &[f64]) -> f64 {
        let mut q = 0.0;
        for i in self.outcome_start[k]..self.outcome_start[k + 1] {
            q += self.prob[i] * (self.reward[i] + discount * v[self.next[i]]);
        }
        q
    }

    /// Largest reward over all outcomes.
    pub fn max_reward(&self) -> f64 {
        self.reward.iter().copied().fold(0.0, f64::max)
    }

    pub fn from_tabular(mdp: &TabularMdp) -> Self {
        let mut out = Self::with_states(mdp.n_states());
        for s in 0..mdp.n_states() {
            for a in 0..mdp.n_actions() {
                let r = mdp.reward().row(s, a);
                out.push_action(a, None, mdp.transition().row(s, a), |s2| r[s2]);
            }
            out.end_state();
        }
        out
    }
}

/// Q-values aligned with the action layout of a [`PlanningMdp`].
#[derive(Debug, Clone, PartialEq)]
pub struct QFunction {
    state_start: Vec<usize>,
    values: Vec<f64>,
}

impl QFunction {
    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[self.state_start[s]..self.state_start[s + 1]]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub values: Vec<f64>,
    pub q: QFunction,
    /// Gauss-Seidel sweeps performed.
    pub iterations: usize,
    /// Sup-norm change of the final synchronous backup; bounds the Bellman
    /// residual of `values`.
    pub residual: f64,
}

fn synchronous_backup(mdp: &PlanningMdp, discount: f64, v: &[f64], q: &mut [f64], out: &mut [f64]) {
    for s in 0..mdp.n_states() {
        let mut best = f64::NEG_INFINITY;
        for k in mdp.actions_of(s) {
            q[k] = mdp.backup(k, discount, v);
            best = best.max(q[k]);
        }
        out[s] = best;
    }
}

/// Gauss-Seidel value iteration in ascending state order.
///
/// After a sweep whose largest change drops below `stop_eps`, one synchronous
/// backup is taken; if it also moves less than `stop_eps` its result is
/// returned, so the returned `values` equal the row maxima of `q`.
pub fn solve(mdp: &PlanningMdp, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let n = mdp.n_states();
    let gamma = config.discount;
    let mut v = match &config.warm_start {
        Some(w) if w.len() == n => w.clone(),
        Some(w) => {
            return Err(Error::InvalidArgument(format!(
                "warm start has {} entries, model has {n} states",
                w.len()
            )))
        }
        None => vec![0.0; n],
    };
    let mut q = vec![0.0; mdp.n_actions_total()];
    let mut next_v = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=config.max_iters {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for k in mdp.actions_of(s) {
                best = best.max(mdp.backup(k, gamma, &v));
            }
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta < config.stop_eps {
            synchronous_backup(mdp, gamma, &v, &mut q, &mut next_v);
            residual = v.iter().zip(&next_v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if residual < config.stop_eps {
                return Ok(Solution {
                    values: next_v,
                    q: QFunction {
                        state_start: mdp.state_start.clone(),
                        values: q,
                    },
                    iterations: it,
                    residual,
                });
            }
        } else {
            residual = delta;
        }
    }
    Err(Error::NonConvergence {
        iterations: config.max_iters,
        residual,
    })
}

/// Value iteration on a tabular MDP with the discount taken from `config`.
pub fn value_iteration(mdp: &TabularMdp, config: &SolverConfig) -> Result<Solution> {
    solve(&PlanningMdp::from_tabular(mdp), config)
}

/// `H` synchronous backups from `V_0 = 0`. Returns `V_0 ..= V_H` and the Q
/// tables `Q_1 ..= Q_H`.
pub fn finite_horizon(mdp: &PlanningMdp, discount: f64, horizon: usize) -> (Vec<Vec<f64>>, Vec<QFunction>) {
    let n = mdp.n_states();
    let mut values = vec![vec![0.0; n]];
    let mut qs = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut q = vec![0.0; mdp.n_actions_total()];
        let mut next = vec![0.0; n];
        synchronous_backup(mdp, discount, values.last().expect("nonempty"), &mut q, &mut next);
        values.push(next);
        qs.push(QFunction {
            state_start: mdp.state_start.clone(),
            values: q,
        });
    }
    (values, qs)
}

/// Exploration bonus added to every outcome of `(s, a)`: `beta / (1 + n(s, a))`
/// where `n(s, a)` is the pseudo-count mass reachable from the pair.
pub fn exploration_bonus(belief: &Belief, s: usize, a: usize, beta: f64) -> f64 {
    beta / (1.0 + belief.pair_mass(s, a))
}

/// Expected model of `belief` with the true rewards, optionally plus the
/// count-based exploration bonus.
pub fn build_expected_mdp(belief: &Belief, reward: &Tensor3, bonus_beta: Option<f64>) -> Result<PlanningMdp> {
    check_reward_shape(belief, reward)?;
    let ns = belief.n_states();
    let mut out = PlanningMdp::with_states(ns);
    let mut row = vec![0.0; ns];
    for s in 0..ns {
        for a in 0..belief.n_actions() {
            belief.expected_row_into(s, a, &mut row)?;
            let r = reward.row(s, a);
            match bonus_beta {
                Some(beta) => {
                    let bonus = exploration_bonus(belief, s, a, beta);
                    out.push_action(a, None, &row, |s2| r[s2] + bonus);
                }
                None => out.push_action(a, None, &row, |s2| r[s2]),
            }
        }
        out.end_state();
    }
    Ok(out)
}

/// Augmented-action MDP: at each state one action per `(a, sigma)` with sigma
/// a possible successor of `(s, a)` under the prior, using the transition row
/// boosted by `eta` artificial observations of `(s, a, sigma)`.
pub fn build_bolt_mdp(belief: &Belief, reward: &Tensor3, eta: f64) -> Result<PlanningMdp> {
    check_reward_shape(belief, reward)?;
    if !(eta >= 0.0) {
        return Err(Error::InvalidArgument(format!("eta = {eta} must be >= 0")));
    }
    let ns = belief.n_states();
    let mut out = PlanningMdp::with_states(ns);
    let mut row = vec![0.0; ns];
    for s in 0..ns {
        for a in 0..belief.n_actions() {
            let r = reward.row(s, a);
            for &sigma in belief.class_map().successors(s, a) {
                belief.bolt_row_into(s, a, sigma, eta, &mut row)?;
                out.push_action(a, Some(sigma), &row, |s2| r[s2]);
            }
        }
        out.end_state();
    }
    Ok(out)
}

/// Solves the expected model of `belief` under the true rewards.
pub fn solve_expected(belief: &Belief, reward: &Tensor3, config: &SolverConfig) -> Result<Solution> {
    solve(&build_expected_mdp(belief, reward, None)?, config)
}

fn check_reward_shape(belief: &Belief, reward: &Tensor3) -> Result<()> {
    if reward.n_states() != belief.n_states() || reward.n_actions() != belief.n_actions() {
        return Err(Error::InvalidArgument(format!(
            "reward is {}x{}, belief is {}x{}",
            reward.n_states(),
            reward.n_actions(),
            belief.n_states(),
            belief.n_actions()
        )));
    }
    Ok(())
}

/// Indices of `values` within [`TIE_TOLERANCE`] of the maximum.
pub fn argmax_set(values: &[f64]) -> Vec<usize> {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * best.abs().max(1.0);
    values
        .iter()
        .enumerate()
        .filter(|(_, &q)| q >= best - tol)
        .map(|(i, _)| i)
        .collect()
}

/// Sup-norm Bellman residual `||B(V) - V||` of `values` on `mdp`.
pub fn bellman_residual(mdp: &PlanningMdp, discount: f64, values: &[f64]) -> f64 {
    let mut q = vec![0.0; mdp.n_actions_total()];
    let mut next = vec![0.0; mdp.n_states()];
    synchronous_backup(mdp, discount, values, &mut q, &mut next);
    values.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
