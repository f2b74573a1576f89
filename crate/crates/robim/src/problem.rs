//! Finite decision problems: states, actions, beliefs, and the
//! expected-utility evaluator everything else builds on.
//!
//! An action is a state-indexed vector of monetary payoffs. A belief is a
//! probability vector over the same states. Comparisons between two actions
//! run through the three-way partition of the state space into the states
//! where the first action pays strictly more (`gain`), strictly less
//! (`loss`), or the same (`tie`).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::utility::UtilityFn;

/// Default absolute tolerance for payoff comparisons.
///
/// Every strict or weak comparison in the crate takes the tolerance
/// explicitly so callers (and tests with rational inputs) can set it to 0.
pub const DEFAULT_EPS: f64 = 1e-9;

/// A finite decision problem: an ordered list of state labels and a map from
/// action id to a payoff vector of matching length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionProblem {
    states: Vec<String>,
    actions: BTreeMap<String, Vec<f64>>,
}

impl DecisionProblem {
    /// Validates and builds a problem. Requires at least two states, at
    /// least one action, payoff vectors of length `states.len()` with all
    /// entries finite, and (via the map) unique action ids.
    pub fn new(states: Vec<String>, actions: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::Invalid {
                what: "decision problem",
                detail: format!("need at least 2 states, got {}", states.len()),
            });
        }
        if actions.is_empty() {
            return Err(Error::Invalid {
                what: "decision problem",
                detail: "need at least one action".into(),
            });
        }
        for (id, payoffs) in &actions {
            if payoffs.len() != states.len() {
                return Err(Error::DimensionMismatch {
                    expected: states.len(),
                    got: payoffs.len(),
                });
            }
            if payoffs.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid {
                    what: "decision problem",
                    detail: format!("action `{id}` has a non-finite payoff"),
                });
            }
        }
        Ok(Self { states, actions })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.actions
    }

    pub fn action_ids(&self) -> Vec<&str> {
        self.actions.keys().map(String::as_str).collect()
    }

    pub fn payoffs(&self, id: &str) -> Result<&[f64]> {
        self.actions
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Domain(format!("unknown action `{id}`")))
    }

    /// All actions other than `id`, in id order.
    pub fn rivals(&self, id: &str) -> Vec<(&str, &[f64])> {
        self.actions
            .iter()
            .filter(|(k, _)| k.as_str() != id)
            .map(|(k, v)| (k.as_str(), v.as_slice()))
            .collect()
    }

    /// Componentwise maximum over all actions other than `id`.
    pub fn rival_max(&self, id: &str) -> Result<Vec<f64>> {
        let rivals = self.rivals(id);
        if rivals.is_empty() {
            return Err(Error::Domain(format!("action `{id}` has no alternatives")));
        }
        let mut max = vec![f64::NEG_INFINITY; self.n_states()];
        for (_, payoffs) in rivals {
            for (m, &x) in max.iter_mut().zip(payoffs) {
                if x > *m {
                    *m = x;
                }
            }
        }
        Ok(max)
    }

    /// Applies a known lower-bound utility to every payoff, producing the
    /// transformed problem all checks should then run on.
    pub fn transform_payoffs(&self, u: &UtilityFn) -> Self {
        let actions = self
            .actions
            .iter()
            .map(|(id, p)| (id.clone(), p.iter().map(|&x| u.eval(x)).collect()))
            .collect();
        Self {
            states: self.states.clone(),
            actions,
        }
    }
}

/// A probability vector over states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Entries must be nonnegative and sum to 1 within 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::Invalid {
                what: "belief",
                detail: format!("need at least 2 states, got {}", probs.len()),
            });
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::Invalid {
                what: "belief",
                detail: format!("entries must be finite and nonnegative: {probs:?}"),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid {
                what: "belief",
                detail: format!("entries sum to {sum}, not 1"),
            });
        }
        Ok(Self(probs))
    }

    /// Point mass on state `state`.
    pub fn degenerate(n: usize, state: usize) -> Result<Self> {
        if state >= n {
            return Err(Error::Domain(format!("state {state} out of range {n}")));
        }
        let mut probs = vec![0.0; n];
        probs[state] = 1.0;
        Self::new(probs)
    }

    /// Belief supported on `{i, j}` with weight `w` on `j`.
    pub fn two_point(n: usize, i: usize, j: usize, w: f64) -> Result<Self> {
        if i >= n || j >= n || i == j {
            return Err(Error::Domain(format!(
                "invalid state pair ({i},{j}) for {n} states"
            )));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Domain(format!("weight {w} outside [0,1]")));
        }
        let mut probs = vec![0.0; n];
        probs[i] = 1.0 - w;
        probs[j] = w;
        Self::new(probs)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }
}

/// Index partition of the states by the sign of `a - b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatePartition {
    /// States where `a` pays strictly more than `b` (beyond tolerance).
    pub a_states: Vec<usize>,
    /// States where `a` pays strictly less than `b`.
    pub b_states: Vec<usize>,
    /// States where the payoffs tie within tolerance.
    pub c_states: Vec<usize>,
}

fn check_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Splits states into gain/loss/tie sets for `a` versus `b`; payoffs within
/// `eps` of each other count as ties.
pub fn partition(a: &[f64], b: &[f64], eps: f64) -> Result<StatePartition> {
    check_len(a, b)?;
    let mut p = StatePartition {
        a_states: Vec::new(),
        b_states: Vec::new(),
        c_states: Vec::new(),
    };
    for (idx, (&x, &y)) in a.iter().zip(b).enumerate() {
        if (x - y).abs() <= eps {
            p.c_states.push(idx);
        } else if x > y {
            p.a_states.push(idx);
        } else {
            p.b_states.push(idx);
        }
    }
    Ok(p)
}

/// Statewise convex combination `lambda * a + (1 - lambda) * b`.
pub fn mixture(a: &[f64], b: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_len(a, b)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!(
            "mixture weight {lambda} outside [0,1]"
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| lambda * x + (1.0 - lambda) * y)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DominanceMode {
    /// `x >= y - eps` in every state.
    Weak,
    /// Weak, plus `x > y + eps` in at least one state.
    StrictSomewhere,
}

/// Statewise dominance of `x` over `y`.
pub fn dominates(x: &[f64], y: &[f64], mode: DominanceMode, eps: f64) -> Result<bool> {
    check_len(x, y)?;
    let weak = x.iter().zip(y).all(|(&p, &q)| p >= q - eps);
    Ok(match mode {
        DominanceMode::Weak => weak,
        DominanceMode::StrictSomewhere => weak && x.iter().zip(y).any(|(&p, &q)| p > q + eps),
    })
}

/// Risk-neutral expectation of a payoff vector.
pub fn expected_value(payoffs: &[f64], belief: &Belief) -> Result<f64> {
    check_len(payoffs, belief.probs())?;
    Ok(payoffs
        .iter()
        .zip(belief.probs())
        .map(|(&x, &p)| p * x)
        .sum())
}

/// Expected utility `sum_theta mu_theta * u(payoff_theta)`.
pub fn expected_utility(payoffs: &[f64], belief: &Belief, u: &UtilityFn) -> Result<f64> {
    check_len(payoffs, belief.probs())?;
    Ok(payoffs
        .iter()
        .zip(belief.probs())
        .map(|(&x, &p)| p * u.eval(x))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_utility_degenerate_belief() {
        let u = UtilityFn::identity();
        let mu = Belief::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(expected_utility(&[1.0, 0.0], &mu, &u).unwrap(), 1.0);
    }

    #[test]
    fn expected_utility_kinked() {
        // u(x) = x for x <= 0, 0.1 x for x > 0
        let u = UtilityFn::kinked_above(0.0, 0.1).unwrap();
        let mu = Belief::new(vec![0.65, 0.35]).unwrap();
        let eu = expected_utility(&[1.0, 0.0], &mu, &u).unwrap();
        assert!((eu - 0.065).abs() < 1e-15);
    }

    #[test]
    fn expected_utility_sqrt_samples() {
        // u(x) = sqrt(1 + x) - 3, evaluated exactly at its sample knots.
        let u = UtilityFn::from_samples(|x| (1.0 + x).sqrt() - 3.0, &[-0.5, 0.0, 0.5, 1.0, 1.5])
            .unwrap();
        let mu = Belief::new(vec![0.5, 0.5]).unwrap();
        let eu = expected_utility(&[0.0, 1.0], &mu, &u).unwrap();
        let expected = (1.0 + 2.0_f64.sqrt()) / 2.0 - 3.0;
        assert!((eu - expected).abs() < 1e-12);
    }

    #[test]
    fn expected_utility_length_mismatch() {
        let u = UtilityFn::identity();
        let mu = Belief::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            expected_utility(&[1.0, 0.0, 2.0], &mu, &u),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partition_basic() {
        let p = partition(&[1.0, 0.0], &[0.0, 1.0], 0.0).unwrap();
        assert_eq!(p.a_states, vec![0]);
        assert_eq!(p.b_states, vec![1]);
        assert!(p.c_states.is_empty());
    }

    #[test]
    fn partition_identical() {
        let p = partition(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 0.0).unwrap();
        assert_eq!(p.c_states, vec![0, 1, 2]);
    }

    #[test]
    fn partition_componentwise() {
        let p = partition(&[0.0, -0.25, -1.0], &[-0.25, 0.0, -0.25], 1e-9).unwrap();
        assert_eq!(p.a_states, vec![0]);
        assert_eq!(p.b_states, vec![1, 2]);
    }

    #[test]
    fn mixture_endpoints_and_interior() {
        let a = [1.0, 0.0];
        let b = [0.0, 1.0];
        assert_eq!(mixture(&a, &b, 1.0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(mixture(&a, &b, 0.0).unwrap(), vec![0.0, 1.0]);
        let m = mixture(&a, &b, 0.4).unwrap();
        assert!((m[0] - 0.4).abs() < 1e-15 && (m[1] - 0.6).abs() < 1e-15);
        assert!(matches!(mixture(&a, &b, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn dominance_modes() {
        let eps = 1e-9;
        assert!(dominates(&[1.0, 0.0], &[1.0, 0.0], DominanceMode::Weak, eps).unwrap());
        assert!(!dominates(
            &[1.0, 0.0],
            &[1.0, 0.0],
            DominanceMode::StrictSomewhere,
            eps
        )
        .unwrap());
        assert!(dominates(&[1.1, 0.1], &[1.0, 0.0], DominanceMode::Weak, eps).unwrap());
        assert!(dominates(
            &[1.1, 0.1],
            &[1.0, 0.0],
            DominanceMode::StrictSomewhere,
            eps
        )
        .unwrap());
        assert!(!dominates(&[1.5, -0.5], &[1.0, 0.0], DominanceMode::Weak, eps).unwrap());
    }

    #[test]
    fn belief_validation() {
        assert!(Belief::new(vec![0.5, 0.5]).is_ok());
        assert!(Belief::new(vec![0.6, 0.5]).is_err());
        assert!(Belief::new(vec![-0.1, 1.1]).is_err());
        let b = Belief::two_point(4, 1, 3, 0.25).unwrap();
        assert_eq!(b.probs(), &[0.0, 0.75, 0.0, 0.25]);
    }

    #[test]
    fn problem_validation() {
        let mut actions = BTreeMap::new();
        actions.insert("a".to_string(), vec![1.0, 0.0]);
        actions.insert("b".to_string(), vec![0.0, 1.0]);
        let p = DecisionProblem::new(vec!["s0".into(), "s1".into()], actions.clone()).unwrap();
        assert_eq!(p.rival_max("a").unwrap(), vec![0.0, 1.0]);

        actions.insert("c".to_string(), vec![0.0]);
        assert!(DecisionProblem::new(vec!["s0".into(), "s1".into()], actions).is_err());
    }
}
