//! Prior families: full (FDM), tied, semi-tied and user-listed structured
//! priors, all expressed as a [`ClassMap`] plus uniform initial counts.

use serde::{Deserialize, Serialize};

use crate::belief::{Belief, ClassMap};
use crate::error::{Error, Result};

/// Outcome structure of a two-outcome environment: for each `(s, a)` the
/// successor of the intended effect and the successor of the slip effect.
/// Probabilities are deliberately absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    /// `intended[s][a]`
    pub intended: Vec<Vec<usize>>,
    /// `slip[s][a]`
    pub slip: Vec<Vec<usize>>,
}

impl Skeleton {
    pub fn n_states(&self) -> usize {
        self.intended.len()
    }

    pub fn n_actions(&self) -> usize {
        self.intended.first().map_or(0, Vec::len)
    }

    /// Checks the shape and that each pair has two distinct outcomes.
    pub fn validate(&self, n_states: usize, n_actions: usize) -> Result<()> {
        if self.intended.len() != n_states || self.slip.len() != n_states {
            return Err(Error::InvalidArgument(format!(
                "skeleton covers {} / {} states, expected {n_states}",
                self.intended.len(),
                self.slip.len()
            )));
        }
        for s in 0..n_states {
            for a in 0..n_actions {
                let mismatch = |reason: String| Error::SkeletonMismatch {
                    state: s,
                    action: a,
                    reason,
                };
                let (Some(&i), Some(&j)) = (self.intended[s].get(a), self.slip[s].get(a)) else {
                    return Err(mismatch("missing intended or slip successor".into()));
                };
                if i >= n_states || j >= n_states {
                    return Err(mismatch(format!("successor out of range ({i}, {j})")));
                }
                if i == j {
                    return Err(mismatch(format!("intended and slip outcomes coincide at {i}")));
                }
            }
            if self.intended[s].len() != n_actions || self.slip[s].len() != n_actions {
                return Err(Error::SkeletonMismatch {
                    state: s,
                    action: n_actions,
                    reason: "more actions than the model declares".into(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorFamily {
    Full,
    Tied,
    Semi,
    Structured,
}

impl std::str::FromStr for PriorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" | "fdm" => Ok(PriorFamily::Full),
            "tied" => Ok(PriorFamily::Tied),
            "semi" => Ok(PriorFamily::Semi),
            "structured" => Ok(PriorFamily::Structured),
            other => Err(Error::InvalidArgument(format!("unknown prior family '{other}'"))),
        }
    }
}

impl std::fmt::Display for PriorFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PriorFamily::Full => "full",
            PriorFamily::Tied => "tied",
            PriorFamily::Semi => "semi",
            PriorFamily::Structured => "structured",
        })
    }
}

/// One `(s, a, s') -> class` entry of a structured listing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub family: PriorFamily,
    pub initial_count: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<ClassEntry>>,
}

impl PriorSpec {
    pub fn new(family: PriorFamily, initial_count: f64) -> Self {
        PriorSpec {
            family,
            initial_count,
            classes: None,
        }
    }

    /// Instantiates the prior for an environment of the given size.
    pub fn build(&self, n_states: usize, n_actions: usize, skeleton: Option<&Skeleton>) -> Result<Belief> {
        let need_skeleton = || {
            skeleton.ok_or_else(|| {
                Error::InvalidArgument(format!("the {} prior needs an environment skeleton", self.family))
            })
        };
        let belief = match self.family {
            PriorFamily::Full => build_full(n_states, n_actions, self.initial_count)?,
            PriorFamily::Tied => build_tied(need_skeleton()?, self.initial_count)?,
            PriorFamily::Semi => build_semi(need_skeleton()?, self.initial_count)?,
            PriorFamily::Structured => {
                let listing = self.classes.as_deref().ok_or_else(|| {
                    Error::InvalidArgument("structured prior needs a class listing".into())
                })?;
                build_structured(n_states, n_actions, listing, self.initial_count)?
            }
        };
        if belief.n_states() != n_states || belief.n_actions() != n_actions {
            return Err(Error::InvalidArgument(format!(
                "prior is {}x{}, environment is {n_states}x{n_actions}",
                belief.n_states(),
                belief.n_actions()
            )));
        }
        Ok(belief)
    }
}

fn check_count(initial_count: f64) -> Result<()> {
    if initial_count.is_finite() && initial_count > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("initial count {initial_count} must be > 0")))
    }
}

/// Independent Dirichlet per state-action pair.
pub fn build_full(n_states: usize, n_actions: usize, initial_count: f64) -> Result<Belief> {
    check_count(initial_count)?;
    Belief::uniform(ClassMap::full(n_states, n_actions)?, initial_count)
}

fn two_outcome(skeleton: &Skeleton, initial_count: f64, class_of: impl Fn(usize, bool) -> usize) -> Result<Belief> {
    check_count(initial_count)?;
    let (ns, na) = (skeleton.n_states(), skeleton.n_actions());
    skeleton.validate(ns, na)?;
    let map = ClassMap::from_fn(ns, na, |s, a, s2| {
        if s2 == skeleton.intended[s][a] {
            Some(class_of(a, true))
        } else if s2 == skeleton.slip[s][a] {
            Some(class_of(a, false))
        } else {
            None
        }
    })?;
    Belief::uniform(map, initial_count)
}

/// Two classes, intended (0) and slip (1), shared by every pair.
pub fn build_tied(skeleton: &Skeleton, initial_count: f64) -> Result<Belief> {
    two_outcome(skeleton, initial_count, |_, intended| usize::from(!intended))
}

/// Per-action intended/slip classes (`2a`, `2a + 1`) shared across states.
pub fn build_semi(skeleton: &Skeleton, initial_count: f64) -> Result<Belief> {
    two_outcome(skeleton, initial_count, |a, intended| 2 * a + usize::from(!intended))
}

/// Prior from an explicit `(s, a, s') -> class` listing. Unlisted triples are
/// impossible.
pub fn build_structured(
    n_states: usize,
    n_actions: usize,
    listing: &[ClassEntry],
    initial_count: f64,
) -> Result<Belief> {
    check_count(initial_count)?;
    let mut table = vec![None; n_states * n_actions * n_states];
    for e in listing {
        if e.state >= n_states || e.action >= n_actions || e.next_state >= n_states {
            return Err(Error::InvalidArgument(format!(
                "class entry ({}, {}, {}) out of range",
                e.state, e.action, e.next_state
            )));
        }
        let slot = &mut table[(e.state * n_actions + e.action) * n_states + e.next_state];
        match *slot {
            Some(c) if c != e.class => {
                return Err(Error::InvalidArgument(format!(
                    "triple ({}, {}, {}) listed with classes {c} and {}",
                    e.state, e.action, e.next_state, e.class
                )))
            }
            _ => *slot = Some(e.class),
        }
    }
    let map = ClassMap::from_fn(n_states, n_actions, |s, a, s2| table[(s * n_actions + a) * n_states + s2])?;
    Belief::uniform(map, initial_count)
}
