//! Robust improvements against a whole set of alternatives.
//!
//! With several rivals the relevant competitor can shift with the agent's
//! risk aversion, which breaks naive pairwise aggregation. Two structural
//! assumptions restore it: *richness* (every action is uniquely optimal in
//! some state) and *single-peakedness* (on every state pair, an action is
//! either risk-neutrally undominated or statewise dominated there). Under
//! them, the candidate improves against the set if and only if it strictly
//! beats the pointwise rival maximum on the incumbent's gain states and
//! dominates a mixture of the incumbent with each rival separately.
//!
//! The checks refuse to return a verdict when the assumptions fail; the
//! characterization is only proved under them.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{mixture, partition, Belief, DecisionProblem};
use crate::superiority::{
    interval_from_partition, two_point_indifference, FailureReason, Verdict, ViolatedClaim, Witness,
};
use crate::utility::UtilityFn;

/// First found violation of single-peakedness: the action and state pair on
/// which it is neither rationalizable by a two-state belief nor dominated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinglePeakViolation {
    pub action: String,
    pub state: usize,
    pub state_prime: usize,
}

/// Outcome of verifying richness and single-peakedness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub rich: bool,
    /// Per action, a state where it is the unique maximizer (if any).
    pub unique_states: BTreeMap<String, Option<usize>>,
    pub single_peaked: bool,
    pub violation: Option<SinglePeakViolation>,
}

impl AssumptionReport {
    pub fn satisfied(&self) -> bool {
        self.rich && self.single_peaked
    }
}

impl std::fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if !self.rich {
            let missing: Vec<&str> = self
                .unique_states
                .iter()
                .filter(|(_, v)| v.is_none())
                .map(|(k, _)| k.as_str())
                .collect();
            write!(f, "not rich (no uniquely-optimal state for {missing:?})")?;
            if !self.single_peaked {
                write!(f, "; ")?;
            }
        }
        if !self.single_peaked {
            match &self.violation {
                Some(v) => write!(
                    f,
                    "not single-peaked (action `{}` on states ({},{}))",
                    v.action, v.state, v.state_prime
                )?,
                None => write!(f, "not single-peaked")?,
            }
        }
        if self.satisfied() {
            write!(f, "rich and single-peaked")?;
        }
        Ok(())
    }
}

/// Largest value over `lambda` in `[0,1]` of
/// `lambda a_t + (1-lambda) a_tp - max_b (lambda b_t + (1-lambda) b_tp)`.
///
/// The envelope is piecewise linear in `lambda`, so the maximum sits at an
/// endpoint or at a crossing of two rival lines; evaluating those points is
/// exact.
fn best_two_state_margin(a: &[f64], rivals: &[(&str, &[f64])], t: usize, tp: usize) -> f64 {
    let mut candidates = vec![0.0, 1.0];
    for (i, (_, b)) in rivals.iter().enumerate() {
        for (_, c) in rivals.iter().skip(i + 1) {
            let db = b[t] - b[tp];
            let dc = c[t] - c[tp];
            if (db - dc).abs() > 1e-14 {
                let lambda = (c[tp] - b[tp]) / (db - dc);
                if (0.0..=1.0).contains(&lambda) {
                    candidates.push(lambda);
                }
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    for &lambda in &candidates {
        let own = lambda * a[t] + (1.0 - lambda) * a[tp];
        let envelope = rivals
            .iter()
            .map(|(_, b)| lambda * b[t] + (1.0 - lambda) * b[tp])
            .fold(f64::NEG_INFINITY, f64::max);
        best = best.max(own - envelope);
    }
    best
}

/// Verifies richness and single-peakedness for every action in the problem.
pub fn check_assumptions(problem: &DecisionProblem, eps: f64) -> AssumptionReport {
    let n = problem.n_states();
    let mut unique_states = BTreeMap::new();
    let mut rich = true;
    let mut single_peaked = true;
    let mut violation = None;

    for (id, payoffs) in problem.actions() {
        let rivals = problem.rivals(id);
        if rivals.is_empty() {
            // a single action is trivially rich and single-peaked
            unique_states.insert(id.clone(), Some(0));
            continue;
        }
        let unique = (0..n).find(|&t| rivals.iter().all(|(_, b)| payoffs[t] > b[t] + eps));
        if unique.is_none() {
            rich = false;
        }
        unique_states.insert(id.clone(), unique);

        if violation.is_some() {
            continue;
        }
        'pairs: for t in 0..n {
            for tp in t + 1..n {
                let dominated_on_pair = rivals
                    .iter()
                    .any(|(_, b)| b[t] >= payoffs[t] - eps && b[tp] >= payoffs[tp] - eps);
                if dominated_on_pair {
                    continue;
                }
                if best_two_state_margin(payoffs, &rivals, t, tp) < -eps {
                    single_peaked = false;
                    violation = Some(SinglePeakViolation {
                        action: id.clone(),
                        state: t,
                        state_prime: tp,
                    });
                    break 'pairs;
                }
            }
        }
    }

    AssumptionReport {
        rich,
        unique_states,
        single_peaked,
        violation,
    }
}

/// Crossing weight at which rival `b` overtakes `a` on the edge from state
/// `theta` toward `theta_prime`.
fn crossing_weight(a: &[f64], b: &[f64], t: usize, tp: usize) -> Option<f64> {
    let num = a[t] - b[t];
    let den = num + b[tp] - a[tp];
    if num <= 0.0 || den <= 1e-14 {
        return None;
    }
    let g = num / den;
    (g < 1.0 + 1e-12).then_some(g)
}

/// The first rival whose indifference line `a` crosses when moving from the
/// point mass on `theta` toward `theta_prime`, among rivals undominated on
/// that state pair. Ties break lexicographically by action id.
pub fn boundary_action(
    problem: &DecisionProblem,
    a_id: &str,
    theta: usize,
    theta_prime: usize,
    eps: f64,
) -> Result<String> {
    let a = problem.payoffs(a_id)?;
    let max_b = problem.rival_max(a_id)?;
    if !(a[theta] > max_b[theta] + eps) {
        return Err(Error::Assumption(format!(
            "state {theta} is not a gain state of `{a_id}` against the rival maximum"
        )));
    }
    if !(a[theta_prime] < max_b[theta_prime] - eps) {
        return Err(Error::Assumption(format!(
            "state {theta_prime} is not a loss state of `{a_id}` against the rival maximum"
        )));
    }
    let rivals = problem.rivals(a_id);
    let mut best: Option<(f64, &str)> = None;
    for (id, b) in &rivals {
        let dominated = rivals.iter().any(|(oid, o)| {
            oid != id
                && o[theta] >= b[theta] - eps
                && o[theta_prime] >= b[theta_prime] - eps
                && (o[theta] > b[theta] + eps || o[theta_prime] > b[theta_prime] + eps)
        });
        if dominated {
            continue;
        }
        if let Some(g) = crossing_weight(a, b, theta, theta_prime) {
            let better = match best {
                None => true,
                // strict improvement only: id order already resolves ties
                Some((bg, _)) => g < bg - 1e-12,
            };
            if better {
                best = Some((g, id));
            }
        }
    }
    best.map(|(_, id)| id.to_string()).ok_or_else(|| {
        Error::Assumption(format!(
            "no rival crosses `{a_id}` on states ({theta},{theta_prime})"
        ))
    })
}

/// Decides whether `ahat` improves on `a` against every rival at once, for
/// all concave utilities and beliefs. Requires richness and
/// single-peakedness; otherwise the verdict is refused with the report.
pub fn check_superior_vs_all(
    problem: &DecisionProblem,
    a_id: &str,
    ahat: &[f64],
    eps: f64,
) -> Result<Verdict> {
    let report = check_assumptions(problem, eps);
    if !report.satisfied() {
        return Err(Error::AssumptionsViolated { report });
    }
    let a = problem.payoffs(a_id)?;
    if ahat.len() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: ahat.len(),
        });
    }
    let max_b = problem.rival_max(a_id)?;
    let part_vs_max = partition(a, &max_b, eps)?;
    for &t in &part_vs_max.a_states {
        if !(ahat[t] > max_b[t] + eps) {
            return Ok(Verdict::fails(FailureReason::GainStateNotImproved {
                state: t,
            }));
        }
    }
    for (id, b) in problem.rivals(a_id) {
        let part = partition(a, b, eps)?;
        let interval = interval_from_partition(a, b, ahat, &part, eps);
        if !interval.feasible {
            return Ok(Verdict::fails(FailureReason::MixtureInfeasible {
                versus: Some(id.to_string()),
                interval,
            }));
        }
        let lambda = interval.midpoint();
        let mix = mixture(a, b, lambda)?;
        if let Some(state) = (0..a.len()).find(|&t| ahat[t] < mix[t] - eps) {
            return Ok(Verdict::fails(FailureReason::MixtureNotDominated {
                versus: Some(id.to_string()),
                lambda,
                state,
            }));
        }
    }
    Ok(Verdict::Holds)
}

fn certify_vs_all(
    a: &[f64],
    rivals: &[(&str, &[f64])],
    ahat: &[f64],
    utility: UtilityFn,
    belief: Belief,
    eps: f64,
) -> Option<Witness> {
    let alts: Vec<&[f64]> = rivals.iter().map(|&(_, b)| b).collect();
    Witness::certify(
        a,
        &alts,
        ahat,
        utility,
        belief,
        ViolatedClaim::NotSetSuperior,
        eps,
    )
    .ok()
}

/// Constructs a certified witness that `ahat` is not superior to `a`
/// against the rival set.
///
/// The construction mirrors the pairwise one but routes two-state beliefs
/// through the boundary action of the offending state pair, which
/// single-peakedness makes the only rival that matters there; every
/// candidate certificate is re-validated against the full rival set.
pub fn witness_not_superior_vs_all(
    problem: &DecisionProblem,
    a_id: &str,
    ahat: &[f64],
    eps: f64,
) -> Result<Witness> {
    if check_superior_vs_all(problem, a_id, ahat, eps)?.holds() {
        return Err(Error::RelationHolds);
    }
    let a = problem.payoffs(a_id)?;
    let rivals = problem.rivals(a_id);
    let max_b = problem.rival_max(a_id)?;
    let part_vs_max = partition(a, &max_b, eps)?;
    let identity = UtilityFn::identity();
    let n = a.len();

    // gain-state failures: point mass on the state
    for &t in &part_vs_max.a_states {
        if ahat[t] < max_b[t] - eps {
            let belief = Belief::degenerate(n, t)?;
            if let Some(w) = certify_vs_all(a, &rivals, ahat, identity.clone(), belief, eps) {
                return Ok(w);
            }
        }
    }

    // regressions on tie states of the rival maximum: pair with a gain state
    for &td in &part_vs_max.c_states {
        if ahat[td] < a[td] - eps {
            for &t in &part_vs_max.a_states {
                for w in edge_weight_grid() {
                    let Ok(belief) = Belief::two_point(n, t, td, w) else {
                        continue;
                    };
                    if let Some(wit) =
                        certify_vs_all(a, &rivals, ahat, identity.clone(), belief, eps)
                    {
                        return Ok(wit);
                    }
                }
            }
        }
    }

    // mixture violations: work each gain/loss pair through its boundary action
    for &t in &part_vs_max.a_states {
        for &tp in &part_vs_max.b_states {
            let mut opponents: Vec<&str> = Vec::new();
            if let Ok(bstar) = boundary_action(problem, a_id, t, tp, eps) {
                opponents.push(rivals.iter().find(|(id, _)| *id == bstar).unwrap().0);
            }
            for (id, _) in &rivals {
                if !opponents.contains(id) {
                    opponents.push(id);
                }
            }
            for opp in opponents {
                let b = rivals.iter().find(|(id, _)| *id == opp).unwrap().1;
                if let Some(w) = pair_witness_vs_all(a, b, &rivals, ahat, t, tp, eps) {
                    return Ok(w);
                }
            }
        }
    }

    Err(Error::Numerical(
        "no two-state certificate validated against the full rival set".into(),
    ))
}

/// A small deterministic grid of edge weights used when scanning for a
/// validating belief.
fn edge_weight_grid() -> impl Iterator<Item = f64> {
    (1..40).map(|i| i as f64 / 40.0)
}

fn pair_witness_vs_all(
    a: &[f64],
    b: &[f64],
    rivals: &[(&str, &[f64])],
    ahat: &[f64],
    t: usize,
    tp: usize,
    eps: f64,
) -> Option<Witness> {
    let identity = UtilityFn::identity();
    let mut utilities = vec![identity];
    for k in 1..=40u32 {
        let iota = (2.0_f64).powi(-(k as i32));
        if let Ok(u) = UtilityFn::kinked_above(a[tp], iota) {
            utilities.push(u);
        }
    }
    for u in utilities {
        let mu_bar = two_point_indifference(a, b, &u, t, tp).ok();
        let mu_hat = two_point_indifference(ahat, b, &u, t, tp).ok();
        let mut weights: Vec<f64> = Vec::new();
        if let (Some(bar), Some(hat)) = (mu_bar, mu_hat) {
            let lo = hat.max(0.0);
            let hi = bar.min(1.0);
            if lo < hi {
                weights.push(0.5 * (lo + hi));
            }
        }
        weights.extend(edge_weight_grid());
        for w in weights {
            let Ok(belief) = Belief::two_point(a.len(), t, tp, w) else {
                continue;
            };
            let alts: Vec<&[f64]> = rivals.iter().map(|&(_, p)| p).collect();
            if let Ok(wit) = Witness::certify(
                a,
                &alts,
                ahat,
                u.clone(),
                belief,
                ViolatedClaim::NotSetSuperior,
                eps,
            ) {
                return Some(wit);
            }
        }
    }
    None
}
