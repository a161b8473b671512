//! True-model environments: the 5-state Chain, a JSON loader for arbitrary
//! tabular environments, and the simulation step.
//!
//! # File schema
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "chain",
//!   "n_states": 5,
//!   "n_actions": 2,
//!   "initial_state": 0,
//!   "discount": 0.95,
//!   "transitions": [[[0.2, 0.8, 0, 0, 0], [0.8, 0.2, 0, 0, 0]], ...],
//!   "rewards":     [[[0.2, 0, 0, 0, 0],   [0.2, 0, 0, 0, 0]],   ...],
//!   "reward_scaling": { "scale": 0.1, "offset": 1.0 },
//!   "skeleton": { "intended": [[1, 0], ...], "slip": [[0, 1], ...] },
//!   "prior": { "family": "tied", "initial_count": 1.0 }
//! }
//! ```
//!
//! `transitions` and `rewards` are indexed `[s][a][s']`. `discount`,
//! `reward_scaling`, `skeleton` and `prior` are optional; the prior defaults to
//! a full prior with unit counts. A structured prior lists its classes as
//! `"classes": [{"state": 0, "action": 1, "next_state": 2, "class": 0}, ...]`.
//!
//! With `reward_scaling`, file rewards `r` are planned with as
//! `r * scale + offset`, which must lie in `[0, 1]`; reported totals are in
//! file units.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{validate_transition, TabularMdp, Tensor3};
use crate::priors::{PriorFamily, PriorSpec, Skeleton};

pub const SCHEMA_VERSION: u32 = 1;

/// Row-sum tolerance accepted when loading files.
pub const FILE_ROW_TOLERANCE: f64 = 1e-6;

pub const CHAIN_STATES: usize = 5;
pub const CHAIN_ACTION_A: usize = 0;
pub const CHAIN_ACTION_B: usize = 1;

/// Affine map from file rewards to normalized planning rewards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardScaling {
    pub scale: f64,
    pub offset: f64,
}

impl RewardScaling {
    pub fn normalize(&self, raw: f64) -> f64 {
        raw * self.scale + self.offset
    }

    pub fn report(&self, normalized: f64) -> f64 {
        (normalized - self.offset) / self.scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub name: String,
    /// Hidden true model, rewards normalized.
    pub model: TabularMdp,
    pub initial_state: usize,
    pub skeleton: Option<Skeleton>,
    pub reward_scaling: Option<RewardScaling>,
}

impl Environment {
    pub fn n_states(&self) -> usize {
        self.model.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.model.n_actions()
    }

    /// Converts a normalized reward back to the environment's own units.
    pub fn report_reward(&self, normalized: f64) -> f64 {
        match self.reward_scaling {
            Some(sc) => sc.report(normalized),
            None => normalized,
        }
    }
}

/// 5-state Chain. Action `a` (0) advances `s_i -> s_{i+1}` and stays in the
/// last state; action `b` (1) returns to the first state. With probability
/// `p_slip` the other action's effect happens instead. Rewards follow the
/// realized effect: staying in the last state pays 1.0, returning to the
/// first state pays 0.2.
pub fn make_chain(p_slip: f64) -> Result<Environment> {
    if !(0.0..=1.0).contains(&p_slip) {
        return Err(Error::InvalidArgument(format!("slip probability {p_slip} not in [0, 1]")));
    }
    let n = CHAIN_STATES;
    let last = n - 1;
    let a_effect = |s: usize| (s + 1).min(last);
    let b_effect = |_: usize| 0;
    let skeleton = Skeleton {
        intended: (0..n).map(|s| vec![a_effect(s), b_effect(s)]).collect(),
        slip: (0..n).map(|s| vec![b_effect(s), a_effect(s)]).collect(),
    };
    let mut t = Tensor3::zeros(n, 2);
    for s in 0..n {
        for a in 0..2 {
            t.set(s, a, skeleton.intended[s][a], 1.0 - p_slip);
            t.set(s, a, skeleton.slip[s][a], p_slip);
        }
    }
    let r = Tensor3::from_fn(n, 2, |s, _, s2| {
        if s == last && s2 == last {
            1.0
        } else if s2 == 0 {
            0.2
        } else {
            0.0
        }
    });
    Ok(Environment {
        name: format!("chain(p={p_slip})"),
        model: TabularMdp::new(t, r, 0.95)?,
        initial_state: 0,
        skeleton: Some(skeleton),
        reward_scaling: None,
    })
}

/// Samples one transition by inverse CDF on a single uniform draw. Returns the
/// successor and the normalized reward.
pub fn env_step<R: Rng + ?Sized>(env: &Environment, state: usize, action: usize, rng: &mut R) -> (usize, f64) {
    let row = env.model.transition().row(state, action);
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut chosen = None;
    for (s2, &p) in row.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            chosen = Some(s2);
            if u < cum {
                break;
            }
        }
    }
    let next = chosen.expect("transition row has positive mass");
    (next, env.model.reward().get(state, action, next))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvFile {
    schema_version: u32,
    name: String,
    n_states: usize,
    n_actions: usize,
    initial_state: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    discount: Option<f64>,
    transitions: Vec<Vec<Vec<f64>>>,
    rewards: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reward_scaling: Option<RewardScaling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    skeleton: Option<Skeleton>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior: Option<PriorSpec>,
}

fn check_shape(field: &str, data: &[Vec<Vec<f64>>], ns: usize, na: usize) -> Result<()> {
    if data.len() != ns {
        return Err(Error::schema(field, format!("{} state blocks, expected {ns}", data.len())));
    }
    for (s, per_action) in data.iter().enumerate() {
        for a in 0..na {
            match per_action.get(a) {
                None => {
                    return Err(Error::schema(
                        format!("{field}[{s}][{a}]"),
                        format!("missing row for (s={s}, a={a})"),
                    ))
                }
                Some(row) if row.len() != ns => {
                    return Err(Error::schema(
                        format!("{field}[{s}][{a}]"),
                        format!("row for (s={s}, a={a}) has {} entries, expected {ns}", row.len()),
                    ))
                }
                Some(_) => {}
            }
        }
        if per_action.len() > na {
            return Err(Error::schema(
                format!("{field}[{s}]"),
                format!("{} action rows, expected {na}", per_action.len()),
            ));
        }
    }
    Ok(())
}

/// Parses and validates an environment document.
pub fn parse_environment(text: &str) -> Result<(Environment, PriorSpec)> {
    let file: EnvFile = serde_json::from_str(text)
        .map_err(|e| Error::schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::schema(
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", file.schema_version),
        ));
    }
    let (ns, na) = (file.n_states, file.n_actions);
    if ns == 0 || na == 0 {
        return Err(Error::schema("n_states/n_actions", "must be >= 1"));
    }
    if file.initial_state >= ns {
        return Err(Error::schema("initial_state", format!("{} out of range", file.initial_state)));
    }
    check_shape("transitions", &file.transitions, ns, na)?;
    check_shape("rewards", &file.rewards, ns, na)?;

    let mut t = Tensor3::from_nested(&file.transitions)?;
    validate_transition(&t, FILE_ROW_TOLERANCE)?;
    for s in 0..ns {
        for a in 0..na {
            let row = t.row_mut(s, a);
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                row.iter_mut().for_each(|p| *p /= sum);
            }
        }
    }

    if let Some(sc) = file.reward_scaling {
        if !(sc.scale.is_finite() && sc.scale != 0.0 && sc.offset.is_finite()) {
            return Err(Error::schema("reward_scaling", "scale must be finite and nonzero"));
        }
    }
    let mut r = Tensor3::from_nested(&file.rewards)?;
    for s in 0..ns {
        for a in 0..na {
            for s2 in 0..ns {
                let raw = r.get(s, a, s2);
                let v = file.reward_scaling.map_or(raw, |sc| sc.normalize(raw));
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Range {
                        state: s,
                        action: a,
                        next_state: s2,
                        value: raw,
                    });
                }
                r.set(s, a, s2, v);
            }
        }
    }

    if let Some(sk) = &file.skeleton {
        sk.validate(ns, na)?;
    }
    let prior = file.prior.unwrap_or(PriorSpec::new(PriorFamily::Full, 1.0));
    let model = TabularMdp::new(t, r, file.discount.unwrap_or(0.95))?;
    let env = Environment {
        name: file.name,
        model,
        initial_state: file.initial_state,
        skeleton: file.skeleton,
        reward_scaling: file.reward_scaling,
    };
    // surface prior/environment mismatches at load time
    prior.build(ns, na, env.skeleton.as_ref())?;
    Ok((env, prior))
}

pub fn load_environment(path: impl AsRef<Path>) -> Result<(Environment, PriorSpec)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_environment(&text).map_err(|e| match e {
        Error::Schema { location, message } => Error::Schema {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    })
}

/// Serializes an environment and prior in the file schema. Rewards are written
/// in file units.
pub fn environment_to_json(env: &Environment, prior: &PriorSpec) -> String {
    let mut rewards = env.model.reward().to_nested();
    if let Some(sc) = env.reward_scaling {
        rewards.iter_mut().flatten().flatten().for_each(|r| *r = sc.report(*r));
    }
    let file = EnvFile {
        schema_version: SCHEMA_VERSION,
        name: env.name.clone(),
        n_states: env.n_states(),
        n_actions: env.n_actions(),
        initial_state: env.initial_state,
        discount: Some(env.model.discount()),
        transitions: env.model.transition().to_nested(),
        rewards,
        reward_scaling: env.reward_scaling,
        skeleton: env.skeleton.clone(),
        prior: Some(prior.clone()),
    };
    serde_json::to_string_pretty(&file).expect("environment serializes")
}
