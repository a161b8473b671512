//! Exact finite-horizon Bayes-adaptive computations by belief-tree expansion.
//!
//! Everything here is exponential in the horizon and meant for tiny instances:
//! the optimal Bayesian value, Bayesian evaluation of a belief-dependent
//! policy, the mixed value function (exact Bayesian backups on "known" pairs,
//! a substitute model elsewhere), the probability of reaching an unknown pair,
//! and the frozen-belief optimistic finite-horizon value. The random-instance
//! checkers at the bottom drive the optimism and induced-inequality
//! experiments.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::belief::{Belief, BeliefState, ClassMap};
use crate::error::{Error, Result};
use crate::mdp::Tensor3;
use crate::solver::{build_bolt_mdp, finite_horizon, PlanningMdp, QFunction};

/// Nodes in a full tree with `|S||A|` children per node, depth 1 to `horizon`.
pub fn estimated_nodes(n_states: usize, n_actions: usize, horizon: usize) -> u128 {
    let branching = (n_states * n_actions) as u128;
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..horizon {
        level = level.saturating_mul(branching);
        total = total.saturating_add(level);
    }
    total
}

/// Default cap: a full tree with `|S||A| = 12` and horizon 5.
pub const DEFAULT_NODE_CAP: u128 = 12 + 144 + 1728 + 20_736 + 248_832;

fn check_budget(belief: &Belief, horizon: usize, cap: u128) -> Result<()> {
    let estimated_nodes = estimated_nodes(belief.n_states(), belief.n_actions(), horizon);
    if estimated_nodes > cap {
        return Err(Error::BudgetExceeded { estimated_nodes, cap });
    }
    Ok(())
}

fn geometric_horizon(gamma: f64, horizon: usize) -> f64 {
    if gamma == 1.0 {
        horizon as f64
    } else {
        (1.0 - gamma.powi(horizon as i32)) / (1.0 - gamma)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma {gamma} not in [0, 1]")))
    }
}

/// A possibly stochastic policy over belief-states.
pub trait BeliefPolicy {
    /// Action distribution at `(state, belief)` with `steps_to_go` decisions
    /// left (at least 1). Must depend only on its arguments.
    fn distribution(&self, state: usize, belief: &Belief, steps_to_go: usize) -> Vec<(usize, f64)>;
}

/// Wraps a deterministic rule `(state, belief, steps_to_go) -> action`.
pub struct Deterministic<F>(pub F);

impl<F: Fn(usize, &Belief, usize) -> usize> BeliefPolicy for Deterministic<F> {
    fn distribution(&self, state: usize, belief: &Belief, steps_to_go: usize) -> Vec<(usize, f64)> {
        vec![((self.0)(state, belief, steps_to_go), 1.0)]
    }
}

pub struct UniformRandom {
    pub n_actions: usize,
}

impl BeliefPolicy for UniformRandom {
    fn distribution(&self, _: usize, _: &Belief, _: usize) -> Vec<(usize, f64)> {
        let p = 1.0 / self.n_actions as f64;
        (0..self.n_actions).map(|a| (a, p)).collect()
    }
}

/// Replacement dynamics used by the mixed value function outside the known set.
pub trait SubstituteModel {
    fn row(&self, state: usize, action: usize, steps_to_go: usize) -> Result<Vec<f64>>;
    fn reward(&self, state: usize, action: usize, next_state: usize) -> f64;
    fn max_reward(&self) -> f64;
}

type MemoKey = (usize, usize, Vec<u64>);

/// Belief-tree evaluator over a known reward tensor.
pub struct Oracle<'r> {
    reward: &'r Tensor3,
    gamma: f64,
    node_cap: u128,
    memoize: bool,
    memo: HashMap<MemoKey, f64>,
    expanded: u64,
}

impl<'r> Oracle<'r> {
    pub fn new(reward: &'r Tensor3, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Oracle {
            reward,
            gamma,
            node_cap: DEFAULT_NODE_CAP,
            memoize: true,
            memo: HashMap::new(),
            expanded: 0,
        })
    }

    pub fn with_node_cap(mut self, cap: u128) -> Self {
        self.node_cap = cap;
        self
    }

    pub fn with_memo(mut self, memoize: bool) -> Self {
        self.memoize = memoize;
        self
    }

    /// Nodes expanded (memo misses) since construction.
    pub fn expanded(&self) -> u64 {
        self.expanded
    }

    fn lookup(&self, key: &MemoKey) -> Option<f64> {
        if self.memoize {
            self.memo.get(key).copied()
        } else {
            None
        }
    }

    fn store(&mut self, key: MemoKey, value: f64) {
        self.expanded += 1;
        if self.memoize {
            self.memo.insert(key, value);
        }
    }

    fn check(&self, bs: &BeliefState, horizon: usize) -> Result<()> {
        if bs.belief.n_states() != self.reward.n_states() || bs.belief.n_actions() != self.reward.n_actions() {
            return Err(Error::InvalidArgument("reward and belief shapes differ".into()));
        }
        check_budget(&bs.belief, horizon, self.node_cap)
    }

    /// Value of action `a` with exact Bayesian branching.
    fn action_value(
        &mut self,
        s: usize,
        a: usize,
        belief: &Belief,
        h: usize,
        next: &mut impl FnMut(&mut Self, usize, &Belief, usize) -> Result<f64>,
    ) -> Result<f64> {
        let row = belief.expected_row(s, a)?;
        let mut q = 0.0;
        for (s2, &p) in row.iter().enumerate() {
            if p > 0.0 {
                let child = belief.bayes_update(s, a, s2)?;
                let cont = next(self, s2, &child, h - 1)?;
                q += p * (self.reward.get(s, a, s2) + self.gamma * cont);
            }
        }
        Ok(q)
    }

    fn optimal(&mut self, s: usize, belief: &Belief, h: usize) -> Result<f64> {
        if h == 0 {
            return Ok(0.0);
        }
        let key = (s, h, belief.counts_key());
        if let Some(v) = self.lookup(&key) {
            return Ok(v);
        }
        let mut best = f64::NEG_INFINITY;
        for a in 0..belief.n_actions() {
            let q = self.action_value(s, a, belief, h, &mut |o, s2, b, h| o.optimal(s2, b, h))?;
            best = best.max(q);
        }
        self.store(key, best);
        Ok(best)
    }

    /// Optimal finite-horizon Bayesian value at `bs`.
    pub fn optimal_value(&mut self, bs: &BeliefState, horizon: usize) -> Result<f64> {
        self.check(bs, horizon)?;
        self.optimal(bs.state, &bs.belief, horizon)
    }

    /// Bayesian action values at the root; their maximum is the optimal value.
    pub fn optimal_action_values(&mut self, bs: &BeliefState, horizon: usize) -> Result<Vec<f64>> {
        self.check(bs, horizon)?;
        if horizon == 0 {
            return Ok(vec![0.0; bs.belief.n_actions()]);
        }
        (0..bs.belief.n_actions())
            .map(|a| self.action_value(bs.state, a, &bs.belief, horizon, &mut |o, s2, b, h| o.optimal(s2, b, h)))
            .collect()
    }

    fn evaluate(&mut self, policy: &dyn BeliefPolicy, s: usize, belief: &Belief, h: usize) -> Result<f64> {
        if h == 0 {
            return Ok(0.0);
        }
        let key = (s, h, belief.counts_key());
        if let Some(v) = self.lookup(&key) {
            return Ok(v);
        }
        let mut v = 0.0;
        for (a, pa) in policy.distribution(s, belief, h) {
            if pa > 0.0 {
                let q = self.action_value(s, a, belief, h, &mut |o, s2, b, h| o.evaluate(policy, s2, b, h))?;
                v += pa * q;
            }
        }
        self.store(key, v);
        Ok(v)
    }

    /// Bayesian evaluation of `policy` over `horizon` steps. The memo is
    /// per-policy: use a fresh oracle for each policy.
    pub fn policy_value(&mut self, policy: &dyn BeliefPolicy, bs: &BeliefState, horizon: usize) -> Result<f64> {
        self.check(bs, horizon)?;
        self.evaluate(policy, bs.state, &bs.belief, horizon)
    }
}

/// Optimal `horizon`-step Bayesian value.
pub fn bayes_optimal_value(bs: &BeliefState, horizon: usize, reward: &Tensor3, gamma: f64) -> Result<f64> {
    Oracle::new(reward, gamma)?.optimal_value(bs, horizon)
}

/// Bayesian evaluation of `policy`.
pub fn bayes_policy_eval(
    policy: &dyn BeliefPolicy,
    bs: &BeliefState,
    horizon: usize,
    reward: &Tensor3,
    gamma: f64,
) -> Result<f64> {
    Oracle::new(reward, gamma)?.policy_value(policy, bs, horizon)
}

/// Greedy policy of the exact Bayes-optimal values (lowest index on ties).
pub struct BayesOptimalPolicy<'r> {
    reward: &'r Tensor3,
    gamma: f64,
}

impl<'r> BayesOptimalPolicy<'r> {
    pub fn new(reward: &'r Tensor3, gamma: f64) -> Self {
        BayesOptimalPolicy { reward, gamma }
    }
}

impl BeliefPolicy for BayesOptimalPolicy<'_> {
    fn distribution(&self, state: usize, belief: &Belief, steps_to_go: usize) -> Vec<(usize, f64)> {
        let bs = BeliefState {
            state,
            belief: belief.clone(),
        };
        let q = Oracle::new(self.reward, self.gamma)
            .and_then(|mut o| o.optimal_action_values(&bs, steps_to_go))
            .expect("budget already checked at the root");
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let a = q.iter().position(|&x| x == best).expect("nonempty");
        vec![(a, 1.0)]
    }
}

/// Frozen-belief optimistic plan: `H` synchronous backups on the augmented
/// model built from one belief.
#[derive(Debug, Clone)]
pub struct BoltPlan {
    mdp: PlanningMdp,
    values: Vec<Vec<f64>>,
    qs: Vec<QFunction>,
    belief: Belief,
    eta: f64,
}

impl BoltPlan {
    pub fn new(belief: &Belief, horizon: usize, eta: f64, reward: &Tensor3, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let mdp = build_bolt_mdp(belief, reward, eta)?;
        let (values, qs) = finite_horizon(&mdp, gamma, horizon);
        Ok(BoltPlan {
            mdp,
            values,
            qs,
            belief: belief.clone(),
            eta,
        })
    }

    pub fn horizon(&self) -> usize {
        self.qs.len()
    }

    /// `V_i(s)` for `i` in `0..=horizon`.
    pub fn value(&self, state: usize, steps_to_go: usize) -> f64 {
        self.values[steps_to_go][state]
    }

    /// Maximizing `(a, sigma)` at `state` with `steps_to_go >= 1` left, lowest
    /// index on ties.
    pub fn action(&self, state: usize, steps_to_go: usize) -> (usize, usize) {
        let k = self.best_index(state, steps_to_go, None);
        (self.mdp.base_action(k), self.mdp.sigma(k).expect("augmented action"))
    }

    fn best_index(&self, state: usize, steps_to_go: usize, base: Option<usize>) -> usize {
        let q = &self.qs[steps_to_go - 1];
        let mut best = None;
        for (k, &v) in self.mdp.actions_of(state).zip(q.row(state)) {
            if base.is_some_and(|a| self.mdp.base_action(k) != a) {
                continue;
            }
            if best.map_or(true, |(_, bv)| v > bv) {
                best = Some((k, v));
            }
        }
        best.expect("state has actions").0
    }

    /// Best sigma for a given base action.
    pub fn sigma_for(&self, state: usize, action: usize, steps_to_go: usize) -> usize {
        let k = self.best_index(state, steps_to_go, Some(action));
        self.mdp.sigma(k).expect("augmented action")
    }
}

/// `V_H^BOLT(s, b)`: `H` exact synchronous optimistic backups ignoring belief
/// evolution.
pub fn bolt_finite_value(bs: &BeliefState, horizon: usize, eta: f64, reward: &Tensor3, gamma: f64) -> Result<f64> {
    Ok(BoltPlan::new(&bs.belief, horizon, eta, reward, gamma)?.value(bs.state, horizon))
}

/// The policy followed by a frozen [`BoltPlan`] (belief argument ignored).
pub struct BoltPolicy<'p>(pub &'p BoltPlan);

impl BeliefPolicy for BoltPolicy<'_> {
    fn distribution(&self, state: usize, _: &Belief, steps_to_go: usize) -> Vec<(usize, f64)> {
        vec![(self.0.action(state, steps_to_go).0, 1.0)]
    }
}

/// Optimistic rows of a [`BoltPlan`] as a substitute model: the transition of
/// `(s, a)` is the boosted row of the plan's best sigma for `a`, computed from
/// the plan's frozen belief.
pub struct BoltSubstitute<'p, 'r> {
    pub plan: &'p BoltPlan,
    pub reward: &'r Tensor3,
}

impl SubstituteModel for BoltSubstitute<'_, '_> {
    fn row(&self, state: usize, action: usize, steps_to_go: usize) -> Result<Vec<f64>> {
        let sigma = self.plan.sigma_for(state, action, steps_to_go);
        self.plan.belief.bolt_row(state, action, sigma, self.plan.eta)
    }

    fn reward(&self, state: usize, action: usize, next_state: usize) -> f64 {
        self.reward.get(state, action, next_state)
    }

    fn max_reward(&self) -> f64 {
        self.reward.values().iter().copied().fold(0.0, f64::max)
    }
}

/// Fixed tabular substitute `(T~, R~)`.
pub struct TabularSubstitute {
    pub transition: Tensor3,
    pub reward: Tensor3,
}

impl SubstituteModel for TabularSubstitute {
    fn row(&self, state: usize, action: usize, _: usize) -> Result<Vec<f64>> {
        Ok(self.transition.row(state, action).to_vec())
    }

    fn reward(&self, state: usize, action: usize, next_state: usize) -> f64 {
        self.reward.get(state, action, next_state)
    }

    fn max_reward(&self) -> f64 {
        self.reward.values().iter().copied().fold(0.0, f64::max)
    }
}

struct MixedEval<'a> {
    policy: &'a dyn BeliefPolicy,
    substitute: &'a dyn SubstituteModel,
    reward: &'a Tensor3,
    known_threshold: f64,
    gamma: f64,
}

impl MixedEval<'_> {
    fn known(&self, belief: &Belief, s: usize, a: usize) -> bool {
        belief.pair_mass(s, a) >= self.known_threshold
    }

    fn value(&self, s: usize, belief: &Belief, h: usize) -> Result<f64> {
        if h == 0 {
            return Ok(0.0);
        }
        let mut v = 0.0;
        for (a, pa) in self.policy.distribution(s, belief, h) {
            if pa == 0.0 {
                continue;
            }
            let known = self.known(belief, s, a);
            let row = if known { belief.expected_row(s, a)? } else { self.substitute.row(s, a, h)? };
            let mut q = 0.0;
            for (s2, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    let r = if known { self.reward.get(s, a, s2) } else { self.substitute.reward(s, a, s2) };
                    let child = belief.bayes_update(s, a, s2)?;
                    q += p * (r + self.gamma * self.value(s2, &child, h - 1)?);
                }
            }
            v += pa * q;
        }
        Ok(v)
    }

    /// Probability, under the exact Bayesian trajectory measure, that the
    /// policy reaches a pair outside the known set within `h` steps.
    fn escape(&self, s: usize, belief: &Belief, h: usize) -> Result<f64> {
        if h == 0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (a, pa) in self.policy.distribution(s, belief, h) {
            if pa == 0.0 {
                continue;
            }
            if !self.known(belief, s, a) {
                total += pa;
                continue;
            }
            let row = belief.expected_row(s, a)?;
            let mut e = 0.0;
            for (s2, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    e += p * self.escape(s2, &belief.bayes_update(s, a, s2)?, h - 1)?;
                }
            }
            total += pa * e;
        }
        Ok(total)
    }
}

/// Mixed value function: exact Bayesian backups on pairs whose pseudo-count
/// mass reaches `known_threshold`, the substitute model on the others, with
/// the belief monitored along every branch.
pub fn mixed_value_eval(
    policy: &dyn BeliefPolicy,
    bs: &BeliefState,
    horizon: usize,
    known_threshold: f64,
    substitute: &dyn SubstituteModel,
    reward: &Tensor3,
    gamma: f64,
) -> Result<f64> {
    check_gamma(gamma)?;
    check_budget(&bs.belief, horizon, DEFAULT_NODE_CAP)?;
    MixedEval {
        policy,
        substitute,
        reward,
        known_threshold,
        gamma,
    }
    .value(bs.state, &bs.belief, horizon)
}

/// Probability of first reaching an unknown pair within `horizon` steps.
pub fn escape_probability(
    policy: &dyn BeliefPolicy,
    bs: &BeliefState,
    horizon: usize,
    known_threshold: f64,
    reward: &Tensor3,
) -> Result<f64> {
    check_budget(&bs.belief, horizon, DEFAULT_NODE_CAP)?;
    let dummy = TabularSubstitute {
        transition: Tensor3::zeros(0, 0),
        reward: Tensor3::zeros(0, 0),
    };
    MixedEval {
        policy,
        substitute: &dummy,
        reward,
        known_threshold,
        gamma: 1.0,
    }
    .escape(bs.state, &bs.belief, horizon)
}

/// Both sides of the induced inequality
/// `V^pi_H >= V~^pi_H - (1 - gamma^H) / (1 - gamma) * Rmax * Pr(escape)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedInequality {
    pub bayes_value: f64,
    pub mixed_value: f64,
    pub escape_probability: f64,
    /// Bound on any single reward collected by either evaluation.
    pub reward_bound: f64,
    pub penalty: f64,
    /// `bayes_value - (mixed_value - penalty)`; nonnegative when it holds.
    pub slack: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn induced_inequality(
    policy: &dyn BeliefPolicy,
    bs: &BeliefState,
    horizon: usize,
    known_threshold: f64,
    substitute: &dyn SubstituteModel,
    reward: &Tensor3,
    gamma: f64,
) -> Result<InducedInequality> {
    let bayes_value = bayes_policy_eval(policy, bs, horizon, reward, gamma)?;
    let mixed_value = mixed_value_eval(policy, bs, horizon, known_threshold, substitute, reward, gamma)?;
    let escape = escape_probability(policy, bs, horizon, known_threshold, reward)?;
    let true_max = reward.values().iter().copied().fold(0.0, f64::max);
    let reward_bound = substitute.max_reward().max(true_max);
    let penalty = geometric_horizon(gamma, horizon) * reward_bound * escape;
    Ok(InducedInequality {
        bayes_value,
        mixed_value,
        escape_probability: escape,
        reward_bound,
        penalty,
        slack: bayes_value - (mixed_value - penalty),
    })
}

/// A random flat-prior instance for the property checks.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub belief_state: BeliefState,
    pub reward: Tensor3,
    pub horizon: usize,
}

/// `|S|, |A|` in {2, 3}, rewards uniform in [0, 1], horizon in {1, 2, 3}.
/// Counts are uniform integers in 1..=4 for even draws and uniform reals in
/// [0.2, 3] for odd draws.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> RandomInstance {
    let ns = rng.gen_range(2..=3);
    let na = rng.gen_range(2..=3);
    let horizon = rng.gen_range(1..=3);
    let integer = rng.gen_bool(0.5);
    let map = ClassMap::full(ns, na).expect("nonempty");
    let counts = (0..map.n_classes())
        .map(|_| {
            if integer {
                f64::from(rng.gen_range(1u32..=4))
            } else {
                rng.gen_range(0.2..3.0)
            }
        })
        .collect();
    let belief = Belief::new(std::sync::Arc::new(map), counts).expect("valid counts");
    let reward = Tensor3::from_fn(ns, na, |_, _, _| rng.gen::<f64>());
    let state = rng.gen_range(0..ns);
    RandomInstance {
        belief_state: BeliefState { state, belief },
        reward,
        horizon,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub instances: usize,
    pub violations: usize,
    /// Smallest observed slack; negative when some instance violates.
    pub min_slack: f64,
}

impl CheckReport {
    fn new() -> Self {
        CheckReport {
            instances: 0,
            violations: 0,
            min_slack: f64::INFINITY,
        }
    }

    fn record(&mut self, slack: f64, tolerance: f64) {
        self.instances += 1;
        self.min_slack = self.min_slack.min(slack);
        if slack < -tolerance {
            self.violations += 1;
        }
    }
}

/// Tolerance on floating-point slack in the property checks.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// Compares `V_H^BOLT` with `eta = H` against the optimal Bayesian value on
/// random flat-prior instances, undiscounted.
pub fn check_optimism(instances: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new();
    for _ in 0..instances {
        let inst = random_instance(&mut rng);
        let h = inst.horizon;
        let bolt = bolt_finite_value(&inst.belief_state, h, h as f64, &inst.reward, 1.0)?;
        let bayes = bayes_optimal_value(&inst.belief_state, h, &inst.reward, 1.0)?;
        report.record(bolt - bayes, CHECK_TOLERANCE);
    }
    Ok(report)
}

/// Checks the induced inequality for the frozen optimistic policy with its
/// own rows as substitute, on random instances with a random known-threshold
/// and discount in {0.9, 0.95, 1}.
pub fn check_induced_inequality(instances: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new();
    for _ in 0..instances {
        let inst = random_instance(&mut rng);
        let h = inst.horizon;
        let gamma = [0.9, 0.95, 1.0][rng.gen_range(0..3)];
        let b = &inst.belief_state.belief;
        let masses: Vec<f64> = (0..b.n_states())
            .flat_map(|s| (0..b.n_actions()).map(move |a| (s, a)))
            .map(|(s, a)| b.pair_mass(s, a))
            .collect();
        let lo = masses.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = masses.iter().copied().fold(0.0, f64::max) + h as f64;
        let threshold = rng.gen_range(lo..=hi);
        let plan = BoltPlan::new(b, h, h as f64, &inst.reward, gamma)?;
        let substitute = BoltSubstitute {
            plan: &plan,
            reward: &inst.reward,
        };
        let check = induced_inequality(
            &BoltPolicy(&plan),
            &inst.belief_state,
            h,
            threshold,
            &substitute,
            &inst.reward,
            gamma,
        )?;
        report.record(check.slack, CHECK_TOLERANCE);
    }
    Ok(report)
}
