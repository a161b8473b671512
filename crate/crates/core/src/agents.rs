//! EXPLOIT-style agents. Every step the agent plans on a model derived from
//! the current belief and acts greedily:
//!
//! * `Exploit`: the expected model.
//! * `EpsGreedy`: as `Exploit`, but a uniform random action with probability
//!   `eps`.
//! * `Beb`: the expected model with reward bonus `beta / (1 + n(s, a))`.
//! * `Bolt`: the augmented `(a, sigma)` model with `eta` artificial
//!   observations of `(s, a, sigma)`; `sigma` is dropped when acting.
//!
//! Ties between maximizing actions are broken uniformly with the agent's RNG,
//! which is only drawn from when a tie (or an exploration coin) exists.

use rand::Rng;

use crate::belief::Belief;
use crate::envs::{env_step, Environment};
use crate::error::{Error, Result};
use crate::mdp::Tensor3;
use crate::priors::PriorSpec;
use crate::solver::{argmax_set, build_bolt_mdp, build_expected_mdp, solve, PlanningMdp, Solution, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentKind {
    Exploit,
    EpsGreedy { eps: f64 },
    Beb { beta: f64 },
    Bolt { eta: f64 },
}

impl AgentKind {
    pub fn name(&self) -> &'static str {
        match self {
            AgentKind::Exploit => "exploit",
            AgentKind::EpsGreedy { .. } => "eps-greedy",
            AgentKind::Beb { .. } => "beb",
            AgentKind::Bolt { .. } => "bolt",
        }
    }

    /// Name and value of the exploration parameter, if any.
    pub fn parameter(&self) -> Option<(&'static str, f64)> {
        match *self {
            AgentKind::Exploit => None,
            AgentKind::EpsGreedy { eps } => Some(("eps", eps)),
            AgentKind::Beb { beta } => Some(("beta", beta)),
            AgentKind::Bolt { eta } => Some(("eta", eta)),
        }
    }

    /// Same kind with its parameter replaced.
    pub fn with_parameter(&self, value: f64) -> AgentKind {
        match self {
            AgentKind::Exploit => AgentKind::Exploit,
            AgentKind::EpsGreedy { .. } => AgentKind::EpsGreedy { eps: value },
            AgentKind::Beb { .. } => AgentKind::Beb { beta: value },
            AgentKind::Bolt { .. } => AgentKind::Bolt { eta: value },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AgentKind::EpsGreedy { eps } if !(0.0..=1.0).contains(&eps) => {
                Err(Error::InvalidArgument(format!("eps = {eps} not in [0, 1]")))
            }
            AgentKind::Beb { beta } if !(beta >= 0.0 && beta.is_finite()) => {
                Err(Error::InvalidArgument(format!("beta = {beta} must be >= 0")))
            }
            AgentKind::Bolt { eta } if !(eta >= 0.0 && eta.is_finite()) => {
                Err(Error::InvalidArgument(format!("eta = {eta} must be >= 0")))
            }
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.parameter() {
            Some((p, v)) => write!(f, "{}({p}={v})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub solver: SolverConfig,
    /// Start each solve from the previous step's values.
    pub warm_start: bool,
}

impl AgentConfig {
    pub fn new(kind: AgentKind) -> Self {
        AgentConfig {
            kind,
            solver: SolverConfig::default(),
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionChoice {
    pub action: usize,
    /// Q-values of the base actions at the current state. For the augmented
    /// model each entry is the best value over that action's sigma variants.
    pub q_row: Vec<f64>,
    /// Number of maximizing base actions.
    pub tie_count: usize,
    /// The maximizing base actions, ascending.
    pub maximizers: Vec<usize>,
    /// Set when the action came from an exploration draw.
    pub explored: bool,
}

/// Per-trial decision maker holding the known reward and a warm-start cache.
#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    reward: Tensor3,
    warm: Option<Vec<f64>>,
    sweeps: usize,
}

impl Agent {
    pub fn new(config: AgentConfig, reward: &Tensor3) -> Result<Self> {
        config.kind.validate()?;
        config.solver.validate()?;
        Ok(Agent {
            config,
            reward: reward.clone(),
            warm: None,
            sweeps: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    /// Total value-iteration sweeps spent so far.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Builds the planning model this agent uses for `belief`.
    pub fn planning_model(&self, belief: &Belief) -> Result<PlanningMdp> {
        match self.config.kind {
            AgentKind::Exploit | AgentKind::EpsGreedy { .. } => build_expected_mdp(belief, &self.reward, None),
            AgentKind::Beb { beta } => build_expected_mdp(belief, &self.reward, Some(beta)),
            AgentKind::Bolt { eta } => build_bolt_mdp(belief, &self.reward, eta),
        }
    }

    /// Plans on `belief` and returns the model and its solution.
    pub fn plan(&mut self, belief: &Belief) -> Result<(PlanningMdp, Solution)> {
        let mdp = self.planning_model(belief)?;
        let mut cfg = self.config.solver.clone();
        if self.config.warm_start {
            cfg.warm_start = self.warm.take();
        }
        let sol = solve(&mdp, &cfg)?;
        self.sweeps += sol.iterations;
        if self.config.warm_start {
            self.warm = Some(sol.values.clone());
        }
        Ok((mdp, sol))
    }

    /// Greedy base-action row and maximizer set at `state`, without drawing
    /// any randomness.
    pub fn greedy(&mut self, state: usize, belief: &Belief) -> Result<(Vec<f64>, Vec<usize>)> {
        let (mdp, sol) = self.plan(belief)?;
        let mut q_row = vec![f64::NEG_INFINITY; belief.n_actions()];
        for (k, &q) in mdp.actions_of(state).zip(sol.q.row(state)) {
            let a = mdp.base_action(k);
            q_row[a] = q_row[a].max(q);
        }
        let maximizers = argmax_set(&q_row);
        Ok((q_row, maximizers))
    }

    pub fn act<R: Rng + ?Sized>(&mut self, state: usize, belief: &Belief, rng: &mut R) -> Result<ActionChoice> {
        let (q_row, maximizers) = self.greedy(state, belief)?;
        if let AgentKind::EpsGreedy { eps } = self.config.kind {
            if eps > 0.0 && rng.gen::<f64>() < eps {
                return Ok(ActionChoice {
                    action: rng.gen_range(0..q_row.len()),
                    tie_count: maximizers.len(),
                    q_row,
                    maximizers,
                    explored: true,
                });
            }
        }
        let action = if maximizers.len() > 1 {
            maximizers[rng.gen_range(0..maximizers.len())]
        } else {
            maximizers[0]
        };
        Ok(ActionChoice {
            action,
            tie_count: maximizers.len(),
            q_row,
            maximizers,
            explored: false,
        })
    }
}

fn act_once<R: Rng + ?Sized>(
    kind: AgentKind,
    state: usize,
    belief: &Belief,
    reward: &Tensor3,
    solver: &SolverConfig,
    rng: &mut R,
) -> Result<ActionChoice> {
    let config = AgentConfig {
        kind,
        solver: solver.clone(),
        warm_start: false,
    };
    Agent::new(config, reward)?.act(state, belief, rng)
}

pub fn act_exploit<R: Rng + ?Sized>(
    state: usize,
    belief: &Belief,
    reward: &Tensor3,
    solver: &SolverConfig,
    rng: &mut R,
) -> Result<ActionChoice> {
    act_once(AgentKind::Exploit, state, belief, reward, solver, rng)
}

pub fn act_eps_greedy<R: Rng + ?Sized>(
    state: usize,
    belief: &Belief,
    reward: &Tensor3,
    solver: &SolverConfig,
    rng: &mut R,
    eps: f64,
) -> Result<ActionChoice> {
    act_once(AgentKind::EpsGreedy { eps }, state, belief, reward, solver, rng)
}

pub fn act_beb<R: Rng + ?Sized>(
    state: usize,
    belief: &Belief,
    reward: &Tensor3,
    solver: &SolverConfig,
    rng: &mut R,
    beta: f64,
) -> Result<ActionChoice> {
    act_once(AgentKind::Beb { beta }, state, belief, reward, solver, rng)
}

pub fn act_bolt<R: Rng + ?Sized>(
    state: usize,
    belief: &Belief,
    reward: &Tensor3,
    solver: &SolverConfig,
    rng: &mut R,
    eta: f64,
) -> Result<ActionChoice> {
    act_once(AgentKind::Bolt { eta }, state, belief, reward, solver, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    /// Reward in the environment's reporting units.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub trajectory: Vec<Transition>,
    /// Undiscounted sum of rewards.
    pub total_reward: f64,
    pub planning_sweeps: usize,
}

/// Act, step, update, repeat for `horizon` steps.
///
/// `env_rng` drives only the environment and `agent_rng` only the agent, so
/// two agents fed the same environment stream see the same noise.
pub fn run_episode<E: Rng + ?Sized, A: Rng + ?Sized>(
    env: &Environment,
    config: &AgentConfig,
    prior: &PriorSpec,
    horizon: usize,
    env_rng: &mut E,
    agent_rng: &mut A,
) -> Result<Episode> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    let mut belief = prior.build(env.n_states(), env.n_actions(), env.skeleton.as_ref())?;
    let mut agent = Agent::new(config.clone(), env.model.reward())?;
    let mut state = env.initial_state;
    let mut trajectory = Vec::with_capacity(horizon);
    let mut total = 0.0;
    for _ in 0..horizon {
        let choice = agent.act(state, &belief, agent_rng)?;
        let (next, r) = env_step(env, state, choice.action, env_rng);
        belief.observe(state, choice.action, next)?;
        let reward = env.report_reward(r);
        total += reward;
        trajectory.push(Transition {
            state,
            action: choice.action,
            next_state: next,
            reward,
        });
        state = next;
    }
    Ok(Episode {
        trajectory,
        total_reward: total,
        planning_sweeps: agent.sweeps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{make_chain, CHAIN_ACTION_A};
    use crate::mdp::TabularMdp;
    use crate::priors::{build_full, PriorFamily};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// One state, two self-loop actions with rewards r0 and r1.
    fn two_arm(r0: f64, r1: f64) -> (Belief, Tensor3) {
        let belief = build_full(1, 2, 1.0).unwrap();
        let reward = Tensor3::from_nested(&[vec![vec![r0], vec![r1]]]).unwrap();
        (belief, reward)
    }

    #[test]
    fn strict_argmax() {
        let (b, r) = two_arm(1.0, 0.2);
        let c = act_exploit(0, &b, &r, &SolverConfig::default(), &mut rng(0)).unwrap();
        assert_eq!((c.action, c.tie_count), (0, 1));
    }

    #[test]
    fn ties_are_uniform() {
        let (b, r) = two_arm(0.5, 0.5);
        let cfg = SolverConfig::default();
        let mut g = rng(1);
        let n = 10_000;
        let zeros = (0..n).filter(|_| act_exploit(0, &b, &r, &cfg, &mut g).unwrap().action == 0).count();
        // 4 sigma binomial band
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.02, "{zeros}");
    }

    #[test]
    fn eps_greedy_mixture() {
        let (b, r) = two_arm(1.0, 0.0);
        let cfg = SolverConfig::default();
        let mut g = rng(2);
        let n = 10_000;
        let freq = |eps: f64, g: &mut ChaCha8Rng| {
            (0..n).filter(|_| act_eps_greedy(0, &b, &r, &cfg, g, eps).unwrap().action == 1).count() as f64 / n as f64
        };
        assert_eq!(freq(0.0, &mut g), 0.0);
        assert!((freq(0.5, &mut g) - 0.25).abs() < 0.02);
        assert!((freq(1.0, &mut g) - 0.5).abs() < 0.02);
    }

    #[test]
    fn beb_bonus_prefers_unvisited_action() {
        // identical rewards, action 1 has far more evidence
        let (mut b, r) = two_arm(0.5, 0.5);
        for _ in 0..99 {
            b = b.bayes_update(0, 1, 0).unwrap();
        }
        let cfg = SolverConfig::default();
        let c = act_beb(0, &b, &r, &cfg, &mut rng(3), 10.0).unwrap();
        assert_eq!((c.action, c.tie_count), (0, 1));
        let c0 = act_beb(0, &b, &r, &cfg, &mut rng(3), 0.0).unwrap();
        assert_eq!(c0.tie_count, 2);
    }

    #[test]
    fn zero_parameters_reduce_to_exploit() {
        let env = make_chain(0.2).unwrap();
        let mut b = build_full(5, 2, 1.0).unwrap();
        let mut g = rng(4);
        let cfg = SolverConfig::default();
        let r = env.model.reward();
        for step in 0..40 {
            let s = step % 5;
            let base = act_exploit(s, &b, r, &cfg, &mut rng(step as u64)).unwrap();
            for kind in [AgentKind::Bolt { eta: 0.0 }, AgentKind::Beb { beta: 0.0 }, AgentKind::EpsGreedy { eps: 0.0 }] {
                let c = act_once(kind, s, &b, r, &cfg, &mut rng(step as u64)).unwrap();
                assert_eq!(c.maximizers, base.maximizers, "{kind}");
                assert_eq!(c.action, base.action, "{kind}");
            }
            let (s2, _) = env_step(&env, s, g.gen_range(0..2), &mut g);
            b = b.bayes_update(s, step % 2, s2).unwrap_or(b);
        }
    }

    #[test]
    fn concentrated_belief_stays_in_last_chain_state() {
        let env = make_chain(0.2).unwrap();
        // pseudo-counts proportional to the true model
        let t = env.model.transition();
        let map = crate::belief::ClassMap::full(5, 2).unwrap();
        let counts: Vec<f64> = (0..5)
            .flat_map(|s| (0..2).flat_map(move |a| (0..5).map(move |s2| (s, a, s2))))
            .map(|(s, a, s2)| 1e6 * t.get(s, a, s2) + 1e-9)
            .collect();
        let b = Belief::new(std::sync::Arc::new(map), counts).unwrap();
        let c = act_exploit(4, &b, env.model.reward(), &SolverConfig::default(), &mut rng(5)).unwrap();
        assert_eq!(c.action, CHAIN_ACTION_A);
    }

    #[test]
    fn episode_totals() {
        let t = Tensor3::from_nested(&[vec![vec![1.0]]]).unwrap();
        let one = Environment {
            name: "one".into(),
            model: TabularMdp::new(t.clone(), t.clone(), 0.95).unwrap(),
            initial_state: 0,
            skeleton: None,
            reward_scaling: None,
        };
        let prior = PriorSpec::new(PriorFamily::Full, 1.0);
        let cfg = AgentConfig::new(AgentKind::Exploit);
        let ep = run_episode(&one, &cfg, &prior, 100, &mut rng(0), &mut rng(1)).unwrap();
        assert_eq!(ep.total_reward, 100.0);
        assert_eq!(ep.trajectory.len(), 100);

        let zero = Environment {
            model: TabularMdp::new(t, Tensor3::zeros(1, 1), 0.95).unwrap(),
            ..one
        };
        let ep = run_episode(&zero, &cfg, &prior, 1, &mut rng(0), &mut rng(1)).unwrap();
        assert_eq!(ep.total_reward, 0.0);
    }

    #[test]
    fn prior_env_mismatch_fails_fast() {
        let env = make_chain(0.2).unwrap();
        // the listing forbids the slip outcome of action a at state 0
        let mut listing = Vec::new();
        for s in 0..5 {
            for a in 0..2 {
                let sk = env.skeleton.as_ref().unwrap();
                listing.push(crate::priors::ClassEntry { state: s, action: a, next_state: sk.intended[s][a], class: 0 });
            }
        }
        let prior = PriorSpec {
            family: PriorFamily::Structured,
            initial_count: 1.0,
            classes: Some(listing),
        };
        let cfg = AgentConfig::new(AgentKind::Exploit);
        let err = run_episode(&env, &cfg, &prior, 1000, &mut rng(0), &mut rng(1)).unwrap_err();
        assert!(matches!(err, Error::ImpossibleTransition { .. }));
    }

    #[test]
    fn invalid_parameters_rejected() {
        let r = Tensor3::zeros(1, 1);
        for kind in [AgentKind::EpsGreedy { eps: 1.5 }, AgentKind::Beb { beta: -1.0 }, AgentKind::Bolt { eta: -0.1 }] {
            assert!(Agent::new(AgentConfig::new(kind), &r).is_err());
        }
    }
}
