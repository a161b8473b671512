use std::path::PathBuf;
use std::process::ExitCode;

use bolt_core::agents::AgentKind;
use bolt_core::harness::{
    compute_theoretical_params, emit_plot_data, linspace_step, run_experiment, run_sweep, EnvSource,
    ExperimentConfig, ExperimentResult,
};
use bolt_core::oracle::{self, BoltPlan};
use bolt_core::par::Jobs;
use bolt_core::{BeliefState, Error, PriorFamily, PriorSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bolt", version, about = "Bayesian RL experiments on tabular MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run independent trials of one agent.
    Run(RunArgs),
    /// Run one experiment per value of the agent's parameter.
    Sweep(SweepArgs),
    /// Exact Bayes-adaptive computations on small instances.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Parameter settings from the sample-complexity analysis.
    Params(ParamsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AgentName {
    Exploit,
    EpsGreedy,
    Beb,
    Bolt,
}

#[derive(Args)]
struct CommonArgs {
    /// `chain`, `chain:<p_slip>` or an environment JSON file.
    #[arg(long, default_value = "chain")]
    env: String,
    /// Prior family (full, tied, semi, structured); defaults to the file's prior.
    #[arg(long)]
    prior: Option<PriorFamily>,
    #[arg(long, default_value_t = 1.0)]
    prior_count: f64,
    #[arg(long, value_enum, default_value = "exploit")]
    agent: AgentName,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 1000)]
    horizon: usize,
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    #[arg(long, default_value_t = 0.01)]
    vi_eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Solve every step from zero instead of the previous values.
    #[arg(long)]
    cold_start: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', conflicts_with = "range")]
    values: Vec<f64>,
    /// `start:end:step`, inclusive.
    #[arg(long)]
    range: Option<String>,
    /// Also run EXPLOIT and write plot data with its mean as reference.
    #[arg(long)]
    reference: bool,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Optimistic finite-horizon value vs. optimal Bayesian value on random
    /// flat-prior instances.
    CheckOptimism {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Induced inequality on random flat-prior instances.
    CheckInduced {
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact values at a belief-state of an environment's prior.
    Value {
        #[arg(long, default_value = "chain")]
        env: String,
        #[arg(long)]
        prior: Option<PriorFamily>,
        #[arg(long, default_value_t = 1.0)]
        prior_count: f64,
        #[arg(long, default_value_t = 0)]
        state: usize,
        #[arg(long, default_value_t = 3)]
        horizon: usize,
        /// Optimism for the frozen-belief value (default: the horizon).
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    #[arg(long, default_value_t = 5)]
    states: usize,
    #[arg(long, default_value_t = 2)]
    actions: usize,
    /// Report m for this eta instead of eta = H.
    #[arg(long)]
    eta: Option<f64>,
}

/// Failure with its process exit code: 2 for configuration errors, 3 for
/// runtime failures.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_config_error() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: msg.into(),
    }
}

fn runtime_error(msg: impl Into<String>) -> Failure {
    Failure {
        code: 3,
        message: msg.into(),
    }
}

fn agent_kind(name: AgentName, eta: f64, beta: f64, eps: f64) -> AgentKind {
    match name {
        AgentName::Exploit => AgentKind::Exploit,
        AgentName::EpsGreedy => AgentKind::EpsGreedy { eps },
        AgentName::Beb => AgentKind::Beb { beta },
        AgentName::Bolt => AgentKind::Bolt { eta },
    }
}

fn experiment(common: &CommonArgs, agent: AgentKind) -> Result<ExperimentConfig, Failure> {
    let env: EnvSource = common.env.parse()?;
    Ok(ExperimentConfig {
        prior: common.prior.map(|family| PriorSpec::new(family, common.prior_count)),
        trials: common.trials,
        horizon: common.horizon,
        gamma: common.gamma,
        vi_eps: common.vi_eps,
        master_seed: common.seed,
        jobs: Jobs(common.jobs),
        warm_start: !common.cold_start,
        out: common.out.clone(),
        ..ExperimentConfig::new(env, agent)
    })
}

fn print_result(r: &ExperimentResult) {
    let (param, value) = r.param();
    let ci = if r.ci_defined { format!("{:.2}", r.ci95) } else { "undefined".to_string() };
    println!(
        "{:<12} {param}={value:<8} mean={:.2} ci95={ci} trials={} sweeps/step={:.1}",
        r.agent.name(),
        r.mean,
        r.totals.len(),
        r.sweeps_per_step
    );
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let kind = agent_kind(args.common.agent, args.eta, args.beta, args.eps);
    let cfg = experiment(&args.common, kind)?;
    let result = run_experiment(&cfg)?;
    eprintln!("{}", result.metadata);
    print_result(&result);
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let values = match &args.range {
        Some(r) => {
            let parts: Vec<f64> = r
                .split(':')
                .map(|x| x.parse().map_err(|_| config_error(format!("bad range '{r}'"))))
                .collect::<Result<_, Failure>>()?;
            let [start, end, step] = parts[..] else {
                return Err(config_error(format!("range '{r}' must be start:end:step")));
            };
            linspace_step(start, end, step)?
        }
        None => args.values.clone(),
    };
    if values.is_empty() {
        return Err(config_error("give --values or --range"));
    }
    let kind = agent_kind(args.common.agent, values[0], values[0], values[0]);
    if kind.parameter().is_none() {
        return Err(config_error("sweeps need an agent with a parameter (eps-greedy, beb, bolt)"));
    }
    let cfg = experiment(&args.common, kind)?;
    let results = run_sweep(&cfg, &values)?;
    eprintln!("{}", results[0].metadata);
    for r in &results {
        print_result(r);
    }
    if args.reference {
        let reference = run_experiment(&ExperimentConfig {
            agent: AgentKind::Exploit,
            out: None,
            ..cfg.clone()
        })?;
        print_result(&reference);
        if let Some(out) = &cfg.out {
            let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            emit_plot_data(&out.with_file_name(format!("{stem}_plot.csv")), &results, Some(&reference))?;
        }
    }
    Ok(())
}

fn oracle_cmd(cmd: OracleCommand) -> Result<(), Failure> {
    match cmd {
        OracleCommand::CheckOptimism { instances, seed } => {
            let report = oracle::check_optimism(instances, seed)?;
            println!(
                "optimism: instances={} violations={} min_slack={:e}",
                report.instances, report.violations, report.min_slack
            );
            if report.violations > 0 {
                return Err(runtime_error(format!("{} violations", report.violations)));
            }
        }
        OracleCommand::CheckInduced { instances, seed } => {
            let report = oracle::check_induced_inequality(instances, seed)?;
            println!(
                "induced inequality: instances={} violations={} min_slack={:e}",
                report.instances, report.violations, report.min_slack
            );
            if report.violations > 0 {
                return Err(runtime_error(format!("{} violations", report.violations)));
            }
        }
        OracleCommand::Value {
            env,
            prior,
            prior_count,
            state,
            horizon,
            eta,
            gamma,
        } => {
            let mut cfg = ExperimentConfig::new(env.parse()?, AgentKind::Exploit);
            cfg.prior = prior.map(|f| PriorSpec::new(f, prior_count));
            let (env, prior) = cfg.resolve()?;
            let belief = prior.build(env.n_states(), env.n_actions(), env.skeleton.as_ref())?;
            let bs = BeliefState::new(state, belief)?;
            let reward = env.model.reward();
            let eta = eta.unwrap_or(horizon as f64);
            let bayes = oracle::bayes_optimal_value(&bs, horizon, reward, gamma)?;
            let plan = BoltPlan::new(&bs.belief, horizon, eta, reward, gamma)?;
            let (a, sigma) = if horizon > 0 { plan.action(state, horizon) } else { (0, 0) };
            println!("bayes_optimal_value={bayes}");
            println!("bolt_finite_value={} (eta={eta}, first action a={a} sigma={sigma})", plan.value(state, horizon));
        }
    }
    Ok(())
}

fn params(args: ParamsArgs) -> Result<(), Failure> {
    if !(args.epsilon > 0.0 && args.gamma > 0.0 && args.gamma < 1.0) {
        return Err(config_error("need epsilon > 0 and 0 < gamma < 1"));
    }
    let p = compute_theoretical_params(args.epsilon, args.delta, args.gamma, args.states, args.actions);
    let eta = args.eta.unwrap_or(p.eta);
    println!("H={}", p.horizon);
    println!("H_half_epsilon={}", p.horizon_half_epsilon);
    println!("eta={eta}");
    println!("m={}", p.m_for_eta(eta));
    let scale = (eta / p.eta).powi(2);
    println!("sample_complexity={:e}", p.sample_complexity * scale);
    println!("log_factor={}", p.log_factor);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Oracle(c) => oracle_cmd(c),
        Command::Params(a) => params(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
