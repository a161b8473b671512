//! Experiment orchestration: independent trials, parameter sweeps, summary
//! statistics and CSV output.

pub mod output;
pub mod params;
pub mod seeding;
pub mod stats;

use std::path::PathBuf;

use crate::agents::{run_episode, AgentConfig, AgentKind};
use crate::envs::{load_environment, make_chain, Environment};
use crate::error::{Error, Result};
use crate::par::{map_trials, Jobs};
use crate::priors::{PriorFamily, PriorSpec};
use crate::solver::SolverConfig;

pub use output::{emit_plot_data, read_aggregate_csv, write_aggregate_csv, write_trials_csv};
pub use params::{compute_theoretical_params, TheoreticalParams};
pub use stats::{summarize, Summary};

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSource {
    Chain { p_slip: f64 },
    File(PathBuf),
}

impl std::str::FromStr for EnvSource {
    type Err = Error;

    /// `chain`, `chain:<p>` or a path to an environment file.
    fn from_str(s: &str) -> Result<Self> {
        if s == "chain" {
            return Ok(EnvSource::Chain { p_slip: 0.2 });
        }
        if let Some(p) = s.strip_prefix("chain:") {
            let p_slip = p
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad slip probability '{p}'")))?;
            return Ok(EnvSource::Chain { p_slip });
        }
        Ok(EnvSource::File(PathBuf::from(s)))
    }
}

impl std::fmt::Display for EnvSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnvSource::Chain { p_slip } => write!(f, "chain:{p_slip}"),
            EnvSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSource,
    /// Overrides the environment file's prior; for the built-in Chain, defaults
    /// to a full prior with unit counts.
    pub prior: Option<PriorSpec>,
    pub agent: AgentKind,
    pub trials: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub vi_eps: f64,
    pub master_seed: u64,
    pub jobs: Jobs,
    pub warm_start: bool,
    /// Long-form trial CSV destination.
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(env: EnvSource, agent: AgentKind) -> Self {
        ExperimentConfig {
            env,
            prior: None,
            agent,
            trials: 500,
            horizon: 1000,
            gamma: 0.95,
            vi_eps: 0.01,
            master_seed: 0,
            jobs: Jobs::default(),
            warm_start: true,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be >= 1".into()));
        }
        self.agent.validate()?;
        self.solver().validate()
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig::new(self.gamma, self.vi_eps)
    }

    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            kind: self.agent,
            solver: self.solver(),
            warm_start: self.warm_start,
        }
    }

    /// Loads or generates the environment and settles the prior.
    pub fn resolve(&self) -> Result<(Environment, PriorSpec)> {
        let (env, file_prior) = match &self.env {
            EnvSource::Chain { p_slip } => (make_chain(*p_slip)?, PriorSpec::new(PriorFamily::Full, 1.0)),
            EnvSource::File(path) => load_environment(path)?,
        };
        let prior = self.prior.clone().unwrap_or(file_prior);
        prior.build(env.n_states(), env.n_actions(), env.skeleton.as_ref())?;
        Ok((env, prior))
    }

    /// One-line description echoed into results.
    pub fn describe(&self, prior: &PriorSpec) -> String {
        format!(
            "env={} prior={}:{} agent={} trials={} horizon={} gamma={} vi_eps={} seed={} warm_start={} version={}",
            self.env,
            prior.family,
            prior.initial_count,
            self.agent,
            self.trials,
            self.horizon,
            self.gamma,
            self.vi_eps,
            self.master_seed,
            self.warm_start,
            env!("CARGO_PKG_VERSION"),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub agent: AgentKind,
    /// Undiscounted total reward of each trial, by trial index.
    pub totals: Vec<f64>,
    pub mean: f64,
    pub ci95: f64,
    pub ci_defined: bool,
    /// Mean value-iteration sweeps per decision.
    pub sweeps_per_step: f64,
    pub metadata: String,
}

impl ExperimentResult {
    /// Parameter column label and value used in CSV output.
    pub fn param(&self) -> (&'static str, f64) {
        self.agent.parameter().unwrap_or(("none", 0.0))
    }
}

/// Runs one trial with the streams of `(master_seed, trial)`.
pub fn run_trial(
    env: &Environment,
    prior: &PriorSpec,
    config: &AgentConfig,
    horizon: usize,
    master_seed: u64,
    trial: usize,
) -> Result<crate::agents::Episode> {
    let mut env_rng = seeding::env_stream(master_seed, trial);
    let mut agent_rng = seeding::agent_stream(master_seed, trial);
    run_episode(env, config, prior, horizon, &mut env_rng, &mut agent_rng)
}

fn run_resolved(config: &ExperimentConfig, env: &Environment, prior: &PriorSpec) -> Result<ExperimentResult> {
    let agent_config = config.agent_config();
    let episodes = map_trials(config.trials, config.jobs, |k| {
        run_trial(env, prior, &agent_config, config.horizon, config.master_seed, k)
            .map(|ep| (ep.total_reward, ep.planning_sweeps))
    });
    let mut totals = Vec::with_capacity(config.trials);
    let mut sweeps = 0usize;
    for ep in episodes {
        let (total, s) = ep?;
        totals.push(total);
        sweeps += s;
    }
    let Summary { mean, ci95, ci_defined } = summarize(&totals);
    Ok(ExperimentResult {
        agent: config.agent,
        totals,
        mean,
        ci95,
        ci_defined,
        sweeps_per_step: sweeps as f64 / (config.trials * config.horizon) as f64,
        metadata: config.describe(prior),
    })
}

/// Runs `config.trials` independent episodes and, when `config.out` is set,
/// writes the long-form trial CSV.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let (env, prior) = config.resolve()?;
    let result = run_resolved(config, &env, &prior)?;
    if let Some(path) = &config.out {
        write_trials_csv(path, std::slice::from_ref(&result))?;
    }
    Ok(result)
}

/// Path of the aggregate CSV written next to a long-form sweep CSV.
pub fn aggregate_path(long_form: &std::path::Path) -> PathBuf {
    let stem = long_form.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    long_form.with_file_name(format!("{stem}_aggregate.csv"))
}

/// One experiment per parameter value with the same master seed, so trial `k`
/// sees the same environment noise at every value. With `config.out` set,
/// writes the long-form CSV there and the aggregate next to it.
pub fn run_sweep(config: &ExperimentConfig, values: &[f64]) -> Result<Vec<ExperimentResult>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    config.validate()?;
    let (env, prior) = config.resolve()?;
    let mut results = Vec::with_capacity(values.len());
    for &v in values {
        let cfg = ExperimentConfig {
            agent: config.agent.with_parameter(v),
            ..config.clone()
        };
        cfg.validate()?;
        results.push(run_resolved(&cfg, &env, &prior)?);
    }
    if let Some(path) = &config.out {
        write_trials_csv(path, &results)?;
        write_aggregate_csv(&aggregate_path(path), &results)?;
    }
    Ok(results)
}

/// `start, start + step, ...` up to `end` inclusive (within half a step).
pub fn linspace_step(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || end < start {
        return Err(Error::InvalidArgument(format!("bad range {start}:{end}:{step}")));
    }
    let n = ((end - start) / step + 0.5).floor() as usize;
    // round to 12 decimals so 0.1-steps print cleanly
    Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_source_parsing() {
        assert_eq!("chain".parse::<EnvSource>().unwrap(), EnvSource::Chain { p_slip: 0.2 });
        assert_eq!("chain:0.5".parse::<EnvSource>().unwrap(), EnvSource::Chain { p_slip: 0.5 });
        assert!(matches!("x.json".parse::<EnvSource>().unwrap(), EnvSource::File(_)));
        assert!("chain:abc".parse::<EnvSource>().is_err());
    }

    #[test]
    fn linspace() {
        assert_eq!(linspace_step(1.0, 5.0, 1.0).unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let fine = linspace_step(0.1, 10.0, 0.1).unwrap();
        assert_eq!(fine.len(), 100);
        assert_eq!(fine[2], 0.3);
        assert_eq!(*fine.last().unwrap(), 10.0);
    }

    #[test]
    fn deterministic_single_trial() {
        let mut cfg = ExperimentConfig::new(EnvSource::Chain { p_slip: 0.0 }, AgentKind::Exploit);
        cfg.trials = 1;
        cfg.horizon = 20;
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.mean, r.totals[0]);
        assert_eq!(r.ci95, 0.0);
        assert!(!r.ci_defined);
    }

    #[test]
    fn zero_parameter_agents_share_trajectories() {
        let mut cfg = ExperimentConfig::new(EnvSource::Chain { p_slip: 0.2 }, AgentKind::Beb { beta: 0.0 });
        cfg.trials = 4;
        cfg.horizon = 60;
        let env = make_chain(0.2).unwrap();
        let prior = PriorSpec::new(PriorFamily::Full, 1.0);
        for k in 0..cfg.trials {
            let mut runs = [AgentKind::Beb { beta: 0.0 }, AgentKind::Bolt { eta: 0.0 }, AgentKind::Exploit]
                .map(|kind| {
                    let c = ExperimentConfig { agent: kind, ..cfg.clone() };
                    run_trial(&env, &prior, &c.agent_config(), c.horizon, 9, k).unwrap().trajectory
                })
                .into_iter();
            let first = runs.next().unwrap();
            assert!(runs.all(|t| t == first));
        }
    }

    #[test]
    fn sweep_of_one_value_matches_run() {
        let mut cfg = ExperimentConfig::new(EnvSource::Chain { p_slip: 0.2 }, AgentKind::Bolt { eta: 3.0 });
        cfg.trials = 3;
        cfg.horizon = 50;
        let run = run_experiment(&cfg).unwrap();
        let sweep = run_sweep(&cfg, &[3.0]).unwrap();
        assert_eq!(sweep, vec![run]);
    }
}
