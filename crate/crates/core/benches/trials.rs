//! Sequential vs. parallel trial execution on the Chain.
//!
//! cargo bench -p bolt-core --bench trials

use bolt_core::agents::AgentKind;
use bolt_core::harness::{run_trial, EnvSource, ExperimentConfig};
use bolt_core::par::{map_sequential, map_trials, Jobs};
use bolt_core::{make_chain, PriorFamily, PriorSpec};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const TRIALS: usize = 32;
const HORIZON: usize = 200;

fn trials(c: &mut Criterion) {
    let env = make_chain(0.2).unwrap();
    let prior = PriorSpec::new(PriorFamily::Full, 1.0);
    let mut group = c.benchmark_group("chain_trials");
    group.sample_size(10);
    for agent in [AgentKind::Exploit, AgentKind::Bolt { eta: 7.0 }] {
        let cfg = ExperimentConfig::new(EnvSource::Chain { p_slip: 0.2 }, agent).agent_config();
        let one = |k| run_trial(&env, &prior, &cfg, HORIZON, 0, k).unwrap().total_reward;
        group.bench_with_input(BenchmarkId::new("sequential", agent), &agent, |b, _| {
            b.iter(|| map_sequential(TRIALS, one))
        });
        group.bench_with_input(BenchmarkId::new("parallel", agent), &agent, |b, _| {
            b.iter(|| map_trials(TRIALS, Jobs::default(), one))
        });
    }
    group.finish();
}

criterion_group!(benches, trials);
criterion_main!(benches);
