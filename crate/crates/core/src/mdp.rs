//! Finite MDPs with dense `T[s][a][s']` and `R[s][a][s']` tensors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on row sums accepted by [`TabularMdp::new`].
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Dense `n_states x n_actions x n_states` tensor stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    n_states: usize,
    n_actions: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Tensor3 {
            n_states,
            n_actions,
            data: vec![0.0; n_states * n_actions * n_states],
        }
    }

    pub fn from_fn(n_states: usize, n_actions: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n_states, n_actions);
        for s in 0..n_states {
            for a in 0..n_actions {
                for s2 in 0..n_states {
                    t.set(s, a, s2, f(s, a, s2));
                }
            }
        }
        t
    }

    /// Builds a tensor from nested `[s][a][s']` vectors, checking the shape.
    pub fn from_nested(nested: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n_states = nested.len();
        let n_actions = nested.first().map_or(0, Vec::len);
        let mut t = Self::zeros(n_states, n_actions);
        for (s, per_action) in nested.iter().enumerate() {
            if per_action.len() != n_actions {
                return Err(Error::InvalidModel(format!(
                    "state {s} has {} actions, expected {n_actions}",
                    per_action.len()
                )));
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != n_states {
                    return Err(Error::InvalidModel(format!(
                        "row ({s}, {a}) has {} entries, expected {n_states}",
                        row.len()
                    )));
                }
                t.row_mut(s, a).copy_from_slice(row);
            }
        }
        Ok(t)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.n_states)
            .map(|s| (0..self.n_actions).map(|a| self.row(s, a).to_vec()).collect())
            .collect()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    fn offset(&self, s: usize, a: usize) -> usize {
        (s * self.n_actions + a) * self.n_states
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.data[self.offset(s, a) + s2]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, s2: usize, value: f64) {
        let o = self.offset(s, a);
        self.data[o + s2] = value;
    }

    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let o = self.offset(s, a);
        &self.data[o..o + self.n_states]
    }

    #[inline]
    pub fn row_mut(&mut self, s: usize, a: usize) -> &mut [f64] {
        let o = self.offset(s, a);
        let n = self.n_states;
        &mut self.data[o..o + n]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

/// A finite MDP `<S, A, T, R>` with discount factor.
///
/// Rewards are normalized to `[0, 1]` and every transition row is a
/// probability distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    transition: Tensor3,
    reward: Tensor3,
    discount: f64,
}

impl TabularMdp {
    pub fn new(transition: Tensor3, reward: Tensor3, discount: f64) -> Result<Self> {
        let (n_states, n_actions) = (transition.n_states(), transition.n_actions());
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidModel("need at least one state and one action".into()));
        }
        if reward.n_states() != n_states || reward.n_actions() != n_actions {
            return Err(Error::InvalidModel("reward and transition shapes differ".into()));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidModel(format!("discount {discount} not in [0, 1)")));
        }
        validate_transition(&transition, ROW_SUM_TOLERANCE)?;
        for s in 0..n_states {
            for a in 0..n_actions {
                for (s2, &r) in reward.row(s, a).iter().enumerate() {
                    if !(0.0..=1.0).contains(&r) {
                        return Err(Error::Range {
                            state: s,
                            action: a,
                            next_state: s2,
                            value: r,
                        });
                    }
                }
            }
        }
        Ok(TabularMdp {
            transition,
            reward,
            discount,
        })
    }

    pub fn n_states(&self) -> usize {
        self.transition.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.transition.n_actions()
    }

    pub fn transition(&self) -> &Tensor3 {
        &self.transition
    }

    pub fn reward(&self) -> &Tensor3 {
        &self.reward
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn with_discount(mut self, discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidModel(format!("discount {discount} not in [0, 1)")));
        }
        self.discount = discount;
        Ok(self)
    }
}

/// Checks that every row of `t` is a probability distribution.
pub fn validate_transition(t: &Tensor3, tolerance: f64) -> Result<()> {
    for s in 0..t.n_states() {
        for a in 0..t.n_actions() {
            let row = t.row(s, a);
            if let Some((s2, &p)) = row.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidModel(format!(
                    "T[{s}][{a}][{s2}] = {p} is not a probability"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::Stochasticity { state: s, action: a, sum });
            }
        }
    }
    Ok(())
}
