//! Dirichlet-multinomial beliefs over transition models.
//!
//! A belief is a vector of nonnegative pseudo-counts indexed by parameter
//! class, plus a [`ClassMap`] that sends each `(s, a, s')` triple either to a
//! class or to "impossible". A flat Dirichlet-multinomial prior (FDM) has one
//! class per triple; tied and structured priors share classes across
//! state-action pairs.
//!
//! The posterior mean of `Pr(s' | s, a)` is the count of the class of
//! `(s, a, s')` divided by the total count of the distinct classes reachable
//! from `(s, a)`. When several successors of the same pair share a class, that
//! class's mass is split evenly among them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mdp::Tensor3;

/// Map from `(s, a, s')` triples to parameter classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    n_states: usize,
    n_actions: usize,
    n_classes: usize,
    map: Vec<Option<usize>>,
    /// Per pair: possible successors in ascending order.
    successors: Vec<Vec<usize>>,
    /// Per pair: distinct reachable classes with their multiplicity.
    classes: Vec<Vec<(usize, u32)>>,
}

impl ClassMap {
    /// Builds a class map from a total function over triples. Fails with
    /// [`Error::IncompleteListing`] naming the first pair without any possible
    /// successor.
    pub fn from_fn(
        n_states: usize,
        n_actions: usize,
        mut f: impl FnMut(usize, usize, usize) -> Option<usize>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidArgument("class map needs at least one state and one action".into()));
        }
        let mut map = Vec::with_capacity(n_states * n_actions * n_states);
        let mut successors = Vec::with_capacity(n_states * n_actions);
        let mut classes = Vec::with_capacity(n_states * n_actions);
        let mut n_classes = 0;
        for s in 0..n_states {
            for a in 0..n_actions {
                let mut succ = Vec::new();
                let mut cls: Vec<(usize, u32)> = Vec::new();
                for s2 in 0..n_states {
                    let c = f(s, a, s2);
                    map.push(c);
                    if let Some(c) = c {
                        n_classes = n_classes.max(c + 1);
                        succ.push(s2);
                        match cls.iter_mut().find(|(k, _)| *k == c) {
                            Some((_, m)) => *m += 1,
                            None => cls.push((c, 1)),
                        }
                    }
                }
                if succ.is_empty() {
                    return Err(Error::IncompleteListing { state: s, action: a });
                }
                successors.push(succ);
                classes.push(cls);
            }
        }
        Ok(ClassMap {
            n_states,
            n_actions,
            n_classes,
            map,
            successors,
            classes,
        })
    }

    /// One class per triple, numbered `(s * |A| + a) * |S| + s'`.
    pub fn full(n_states: usize, n_actions: usize) -> Result<Self> {
        Self::from_fn(n_states, n_actions, |s, a, s2| Some((s * n_actions + a) * n_states + s2))
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    #[inline]
    fn pair(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    #[inline]
    pub fn class_of(&self, s: usize, a: usize, s2: usize) -> Option<usize> {
        self.map[self.pair(s, a) * self.n_states + s2]
    }

    /// Successors of `(s, a)` that the prior deems possible.
    pub fn successors(&self, s: usize, a: usize) -> &[usize] {
        &self.successors[self.pair(s, a)]
    }

    /// Distinct classes reachable from `(s, a)` with their multiplicities.
    pub fn pair_classes(&self, s: usize, a: usize) -> &[(usize, u32)] {
        &self.classes[self.pair(s, a)]
    }
}

/// Posterior over transition models: class pseudo-counts plus the class map.
///
/// Beliefs are values: [`Belief::bayes_update`] returns a new belief. The class
/// map is shared between all beliefs derived from the same prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    map: Arc<ClassMap>,
    counts: Vec<f64>,
}

impl Belief {
    pub fn new(map: Arc<ClassMap>, counts: Vec<f64>) -> Result<Self> {
        if counts.len() != map.n_classes() {
            return Err(Error::InvalidArgument(format!(
                "{} counts for {} classes",
                counts.len(),
                map.n_classes()
            )));
        }
        if let Some(c) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidArgument(format!("pseudo-count {c} must be finite and >= 0")));
        }
        Ok(Belief { map, counts })
    }

    /// Every class starts with the same count.
    pub fn uniform(map: ClassMap, initial_count: f64) -> Result<Self> {
        let n = map.n_classes();
        Self::new(Arc::new(map), vec![initial_count; n])
    }

    pub fn class_map(&self) -> &ClassMap {
        &self.map
    }

    pub fn shared_class_map(&self) -> Arc<ClassMap> {
        Arc::clone(&self.map)
    }

    pub fn n_states(&self) -> usize {
        self.map.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.map.n_actions()
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Whether every pair has strictly positive reachable mass.
    pub fn is_proper(&self) -> bool {
        (0..self.n_states()).all(|s| (0..self.n_actions()).all(|a| self.pair_mass(s, a) > 0.0))
    }

    /// Total pseudo-count mass of the classes reachable from `(s, a)`.
    pub fn pair_mass(&self, s: usize, a: usize) -> f64 {
        self.map.pair_classes(s, a).iter().map(|&(c, _)| self.counts[c]).sum()
    }

    fn class_or_impossible(&self, s: usize, a: usize, s2: usize) -> Result<usize> {
        self.map.class_of(s, a, s2).ok_or(Error::ImpossibleTransition {
            state: s,
            action: a,
            next_state: s2,
        })
    }

    /// Posterior after observing `(s, a, s2)`; `self` is left untouched.
    pub fn bayes_update(&self, s: usize, a: usize, s2: usize) -> Result<Belief> {
        let mut next = self.clone();
        next.observe(s, a, s2)?;
        Ok(next)
    }

    /// In-place form of [`Belief::bayes_update`].
    pub fn observe(&mut self, s: usize, a: usize, s2: usize) -> Result<()> {
        let c = self.class_or_impossible(s, a, s2)?;
        self.counts[c] += 1.0;
        Ok(())
    }

    fn fill_row(&self, s: usize, a: usize, boost: Option<(usize, f64)>, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.n_states());
        let classes = self.map.pair_classes(s, a);
        let mut total: f64 = classes.iter().map(|&(c, _)| self.counts[c]).sum();
        if let Some((_, eta)) = boost {
            total += eta;
        }
        if !(total > 0.0) {
            return Err(Error::DegeneratePrior { state: s, action: a });
        }
        out.fill(0.0);
        for &s2 in self.map.successors(s, a) {
            let c = self.map.class_of(s, a, s2).expect("successor has a class");
            let mut w = self.counts[c];
            if let Some((bc, eta)) = boost {
                if bc == c {
                    w += eta;
                }
            }
            let mult = classes.iter().find(|(k, _)| *k == c).map_or(1, |&(_, m)| m);
            out[s2] = if mult == 1 { w / total } else { w / total / f64::from(mult) };
        }
        Ok(())
    }

    /// Posterior mean row `E[Pr(. | s, a) | b]` written into `out`.
    pub fn expected_row_into(&self, s: usize, a: usize, out: &mut [f64]) -> Result<()> {
        self.fill_row(s, a, None, out)
    }

    pub fn expected_row(&self, s: usize, a: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_states()];
        self.expected_row_into(s, a, &mut out)?;
        Ok(out)
    }

    /// Posterior mean row after adding `eta` artificial observations of
    /// `(s, a, sigma)`.
    pub fn bolt_row_into(&self, s: usize, a: usize, sigma: usize, eta: f64, out: &mut [f64]) -> Result<()> {
        if !(eta >= 0.0) {
            return Err(Error::InvalidArgument(format!("eta = {eta} must be >= 0")));
        }
        let c = self.class_or_impossible(s, a, sigma)?;
        self.fill_row(s, a, Some((c, eta)), out)
    }

    pub fn bolt_row(&self, s: usize, a: usize, sigma: usize, eta: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_states()];
        self.bolt_row_into(s, a, sigma, eta, &mut out)?;
        Ok(out)
    }

    /// Canonical memo key: raw bit patterns of the counts.
    pub fn counts_key(&self) -> Vec<u64> {
        self.counts.iter().map(|c| c.to_bits()).collect()
    }
}

/// Observed state together with the belief, `omega = (s, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub state: usize,
    pub belief: Belief,
}

impl BeliefState {
    pub fn new(state: usize, belief: Belief) -> Result<Self> {
        if state >= belief.n_states() {
            return Err(Error::InvalidArgument(format!(
                "state {state} out of range for {} states",
                belief.n_states()
            )));
        }
        Ok(BeliefState { state, belief })
    }
}

pub fn bayes_update(belief: &Belief, s: usize, a: usize, s2: usize) -> Result<Belief> {
    belief.bayes_update(s, a, s2)
}

/// Posterior mean transition tensor of `belief`.
pub fn expected_model(belief: &Belief) -> Result<Tensor3> {
    let (ns, na) = (belief.n_states(), belief.n_actions());
    let mut t = Tensor3::zeros(ns, na);
    for s in 0..ns {
        for a in 0..na {
            belief.expected_row_into(s, a, t.row_mut(s, a))?;
        }
    }
    Ok(t)
}

/// Optimistic local transition row for the augmented action `(a, sigma)`.
pub fn bolt_transition(belief: &Belief, s: usize, a: usize, sigma: usize, eta: f64) -> Result<Vec<f64>> {
    belief.bolt_row(s, a, sigma, eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fdm(ns: usize, na: usize, c: f64) -> Belief {
        Belief::uniform(ClassMap::full(ns, na).unwrap(), c).unwrap()
    }

    /// Two-outcome map: successor 0 is class 0, successor 1 is class 1.
    fn tied_two_state(na: usize) -> Belief {
        let map = ClassMap::from_fn(2, na, |_, _, s2| Some(s2)).unwrap();
        Belief::uniform(map, 1.0).unwrap()
    }

    #[test]
    fn fdm_update_increments_one_counter() {
        let b = fdm(5, 1, 1.0);
        let b2 = b.bayes_update(0, 0, 2).unwrap();
        let row: Vec<f64> = b2.counts()[..5].to_vec();
        assert_eq!(row, vec![1.0, 1.0, 2.0, 1.0, 1.0]);
        // input untouched
        assert!(b.counts().iter().all(|&c| c == 1.0));
    }

    #[test]
    fn tied_update_hits_shared_class() {
        let b = tied_two_state(2);
        let b2 = b.bayes_update(1, 1, 0).unwrap();
        assert_eq!(b2.counts(), &[2.0, 1.0]);
    }

    #[test]
    fn repeated_updates_add_n() {
        let mut b = fdm(3, 2, 1.5);
        for _ in 0..7 {
            b = b.bayes_update(2, 1, 0).unwrap();
        }
        let c = b.class_map().class_of(2, 1, 0).unwrap();
        for (k, &v) in b.counts().iter().enumerate() {
            assert_eq!(v, if k == c { 8.5 } else { 1.5 });
        }
    }

    #[test]
    fn impossible_triple_is_rejected() {
        let map = ClassMap::from_fn(2, 1, |_, _, s2| (s2 == 0).then_some(0)).unwrap();
        let b = Belief::uniform(map, 1.0).unwrap();
        assert!(matches!(
            b.bayes_update(0, 0, 1),
            Err(Error::ImpossibleTransition { state: 0, action: 0, next_state: 1 })
        ));
        assert!(matches!(b.bolt_row(0, 0, 1, 2.0), Err(Error::ImpossibleTransition { .. })));
    }

    #[test]
    fn expected_row_matches_normalized_counts() {
        let b = fdm(5, 1, 1.0).bayes_update(0, 0, 2).unwrap();
        let row = b.expected_row(0, 0).unwrap();
        let want = [1.0 / 6.0, 1.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for (x, y) in row.iter().zip(want) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_counts_give_uniform_rows() {
        let t = expected_model(&fdm(4, 3, 7.0)).unwrap();
        assert!(t.values().iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn zero_mass_is_degenerate() {
        let map = Arc::new(ClassMap::full(2, 1).unwrap());
        let b = Belief::new(map, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(!b.is_proper());
        assert!(matches!(expected_model(&b), Err(Error::DegeneratePrior { state: 0, action: 0 })));
    }

    #[test]
    fn bolt_row_examples() {
        let b = fdm(2, 1, 1.0);
        assert_eq!(b.bolt_row(0, 0, 0, 2.0).unwrap(), vec![0.75, 0.25]);
        assert_eq!(b.bolt_row(0, 0, 1, 0.0).unwrap(), b.expected_row(0, 0).unwrap());

        let b3 = fdm(3, 1, 1.0);
        let row = b3.bolt_row(0, 0, 1, 1e12).unwrap();
        assert!(row[1] > 1.0 - 1e-11 && row[0] < 1e-11 && row[2] < 1e-11);
    }

    #[test]
    fn shared_class_mass_is_split_among_successors() {
        // successors 1 and 2 share class 1
        let map = ClassMap::from_fn(3, 1, |_, _, s2| Some(usize::from(s2 > 0))).unwrap();
        let b = Belief::uniform(map, 1.0).unwrap();
        assert_eq!(b.expected_row(0, 0).unwrap(), vec![0.5, 0.25, 0.25]);
        assert_eq!(b.pair_mass(0, 0), 2.0);
    }

    #[test]
    fn negative_counts_rejected() {
        let map = Arc::new(ClassMap::full(1, 1).unwrap());
        assert!(Belief::new(map, vec![-1.0]).is_err());
    }
}
