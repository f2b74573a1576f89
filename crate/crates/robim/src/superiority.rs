//! Robust pairwise improvements and their falsifying witnesses.
//!
//! Fix actions `a` and `b`, neither statewise dominating the other. A
//! candidate `ahat` is *b-superior* to `a` when every risk-averse
//! expected-utility agent who weakly (strictly) prefers `a` to `b` also
//! weakly (strictly) prefers `ahat` to `b`, whatever their belief. Dropping
//! risk aversion gives the *b-better* relation.
//!
//! Both relations reduce to statewise payoff conditions:
//! * b-superior: `ahat` strictly beats `b` on every gain state of `a` and
//!   weakly dominates some mixture `lambda a + (1 - lambda) b`;
//! * b-better: `ahat` strictly beats `b` on every gain state of `a` and
//!   weakly dominates `a` or `b` outright.
//!
//! When a check fails, the witness constructors build a concrete
//! (utility, belief) certificate under which the agent ranks
//! `a > b > ahat`, using a kinked piecewise-linear utility on a two-state
//! belief. Every witness is re-validated numerically before it is returned.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{
    dominates, expected_utility, mixture, partition, Belief, DominanceMode, StatePartition,
};
use crate::utility::UtilityFn;

/// The set of mixture weights `lambda` for which `ahat` statewise dominates
/// `lambda a + (1 - lambda) b`, described by its endpoints.
///
/// `lower` and `upper` come straight from the per-state payoff ratios, so on
/// infeasible instances they can fall outside `[0, 1]` (that is the
/// certificate of infeasibility).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaInterval {
    pub lower: f64,
    pub upper: f64,
    pub feasible: bool,
}

impl LambdaInterval {
    /// Midpoint of the interval clamped into `[0, 1]`.
    pub fn midpoint(&self) -> f64 {
        (0.5 * (self.lower + self.upper)).clamp(0.0, 1.0)
    }
}

/// Outcome of a robustness check.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails { reason: FailureReason },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn fails(reason: FailureReason) -> Self {
        Verdict::Fails { reason }
    }
}

/// Why a check failed. `versus` names the alternative action when the check
/// ran against a set of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FailureReason {
    /// `ahat` does not strictly beat the alternative on a state where `a` does.
    GainStateNotImproved { state: usize },
    /// `ahat` falls below `a` on a state where `a` and the alternative tie.
    TieStateRegression { state: usize },
    /// No mixture weight works: the per-state bounds cross.
    MixtureInfeasible {
        versus: Option<String>,
        interval: LambdaInterval,
    },
    /// A mixture weight exists on the gain/loss states but the candidate
    /// still drops below the mixture somewhere.
    MixtureNotDominated {
        versus: Option<String>,
        lambda: f64,
        state: usize,
    },
    /// The candidate dominates neither `a` nor `b` statewise.
    DominatesNeither,
    /// Known-utility case: expected payoff drops below `a`'s at a vertex of
    /// an indifference face.
    RotationFails {
        versus: String,
        vertex: Vec<f64>,
        shortfall: f64,
    },
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureReason::GainStateNotImproved { state } => {
                write!(
                    f,
                    "candidate does not strictly beat the alternative in state {state}"
                )
            }
            FailureReason::TieStateRegression { state } => {
                write!(
                    f,
                    "candidate falls below the incumbent in tie state {state}"
                )
            }
            FailureReason::MixtureInfeasible { versus, interval } => {
                let vs = versus.as_deref().unwrap_or("the alternative");
                write!(
                    f,
                    "no mixture weight works against {vs}: need lambda >= {:.6} and lambda <= {:.6}",
                    interval.lower, interval.upper
                )
            }
            FailureReason::MixtureNotDominated {
                versus,
                lambda,
                state,
            } => {
                let vs = versus.as_deref().unwrap_or("the alternative");
                write!(
                    f,
                    "candidate drops below the lambda = {lambda:.6} mixture with {vs} in state {state}"
                )
            }
            FailureReason::DominatesNeither => {
                write!(
                    f,
                    "candidate dominates neither the incumbent nor the alternative"
                )
            }
            FailureReason::RotationFails {
                versus,
                vertex,
                shortfall,
            } => {
                write!(
                    f,
                    "candidate loses {shortfall:.6} versus the incumbent at the {versus}-indifference vertex {vertex:?}"
                )
            }
        }
    }
}

/// Which robustness claim a witness refutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolatedClaim {
    #[serde(rename = "not-b-superior")]
    NotBSuperior,
    #[serde(rename = "not-b-better")]
    NotBBetter,
    #[serde(rename = "not-B-superior")]
    NotSetSuperior,
}

/// A certificate that a robustness relation fails: a utility and belief
/// under which the agent strictly ranks `a` above the best alternative and
/// the best alternative above `ahat`.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub utility: UtilityFn,
    pub belief: Belief,
    pub eu_a: f64,
    pub eu_b: f64,
    pub eu_ahat: f64,
    pub violated_claim: ViolatedClaim,
}

impl Witness {
    /// Recomputes the expected utilities and enforces the certificate chain
    /// `eu_a > eu_b + eps` and `eu_b > eu_ahat + eps`, where `eu_b` is the
    /// best alternative. Claims other than `NotBBetter` additionally require
    /// a concavity-validated utility.
    pub fn certify(
        a: &[f64],
        alternatives: &[&[f64]],
        ahat: &[f64],
        utility: UtilityFn,
        belief: Belief,
        violated_claim: ViolatedClaim,
        eps: f64,
    ) -> Result<Witness> {
        if alternatives.is_empty() {
            return Err(Error::Invalid {
                what: "witness",
                detail: "no alternative actions".into(),
            });
        }
        if violated_claim != ViolatedClaim::NotBBetter && !utility.is_concave() {
            return Err(Error::Invalid {
                what: "witness",
                detail: "claim requires a concavity-validated utility".into(),
            });
        }
        let eu_a = expected_utility(a, &belief, &utility)?;
        let mut eu_b = f64::NEG_INFINITY;
        for alt in alternatives {
            eu_b = eu_b.max(expected_utility(alt, &belief, &utility)?);
        }
        let eu_ahat = expected_utility(ahat, &belief, &utility)?;
        if !(eu_a > eu_b + eps && eu_b > eu_ahat + eps) {
            return Err(Error::Invalid {
                what: "witness",
                detail: format!(
                    "certificate chain fails: eu_a = {eu_a}, eu_b = {eu_b}, eu_ahat = {eu_ahat}"
                ),
            });
        }
        Ok(Witness {
            utility,
            belief,
            eu_a,
            eu_b,
            eu_ahat,
            violated_claim,
        })
    }
}

/// Interval bounds computed from a precomputed partition; sides without
/// states impose no constraint.
pub(crate) fn interval_from_partition(
    a: &[f64],
    b: &[f64],
    ahat: &[f64],
    part: &StatePartition,
    eps: f64,
) -> LambdaInterval {
    let mut upper = 1.0_f64;
    for &t in &part.a_states {
        upper = upper.min((ahat[t] - b[t]) / (a[t] - b[t]));
    }
    let mut lower = 0.0_f64;
    for &t in &part.b_states {
        lower = lower.max((b[t] - ahat[t]) / (b[t] - a[t]));
    }
    LambdaInterval {
        lower,
        upper,
        feasible: lower <= upper + eps,
    }
}

fn require_proper_pair(part: &StatePartition) -> Result<()> {
    if part.a_states.is_empty() {
        return Err(Error::Assumption(
            "action b weakly dominates action a".into(),
        ));
    }
    if part.b_states.is_empty() {
        return Err(Error::Assumption(
            "action a weakly dominates action b".into(),
        ));
    }
    Ok(())
}

/// Range of mixture weights `lambda` such that `ahat` statewise dominates
/// `lambda a + (1 - lambda) b`. Requires that neither `a` nor `b` weakly
/// dominates the other.
pub fn lambda_interval(a: &[f64], b: &[f64], ahat: &[f64], eps: f64) -> Result<LambdaInterval> {
    if a.len() != ahat.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: ahat.len(),
        });
    }
    let part = partition(a, b, eps)?;
    require_proper_pair(&part)?;
    Ok(interval_from_partition(a, b, ahat, &part, eps))
}

/// Decides b-superiority via its statewise characterization: strict improvement over
/// `b` on every gain state, no regression below `a` on tie states, and
/// statewise dominance of some mixture of `a` and `b`.
pub fn check_b_superior(a: &[f64], b: &[f64], ahat: &[f64], eps: f64) -> Result<Verdict> {
    if a.len() != ahat.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: ahat.len(),
        });
    }
    let part = partition(a, b, eps)?;
    require_proper_pair(&part)?;
    for &t in &part.a_states {
        if !(ahat[t] > b[t] + eps) {
            return Ok(Verdict::fails(FailureReason::GainStateNotImproved {
                state: t,
            }));
        }
    }
    for &t in &part.c_states {
        if ahat[t] < a[t] - eps {
            return Ok(Verdict::fails(FailureReason::TieStateRegression {
                state: t,
            }));
        }
    }
    let interval = interval_from_partition(a, b, ahat, &part, eps);
    if !interval.feasible {
        return Ok(Verdict::fails(FailureReason::MixtureInfeasible {
            versus: None,
            interval,
        }));
    }
    let lambda = interval.midpoint();
    let mix = mixture(a, b, lambda)?;
    if let Some(state) = (0..a.len()).find(|&t| ahat[t] < mix[t] - eps) {
        return Ok(Verdict::fails(FailureReason::MixtureNotDominated {
            versus: None,
            lambda,
            state,
        }));
    }
    Ok(Verdict::Holds)
}

/// Characterization of b-betterness (no risk-aversion restriction): strict
/// improvement over `b` on every gain state, plus statewise dominance of
/// `a` or of `b`.
pub fn check_b_better(a: &[f64], b: &[f64], ahat: &[f64], eps: f64) -> Result<Verdict> {
    if a.len() != ahat.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: ahat.len(),
        });
    }
    let part = partition(a, b, eps)?;
    require_proper_pair(&part)?;
    for &t in &part.a_states {
        if !(ahat[t] > b[t] + eps) {
            return Ok(Verdict::fails(FailureReason::GainStateNotImproved {
                state: t,
            }));
        }
    }
    if dominates(ahat, a, DominanceMode::Weak, eps)?
        || dominates(ahat, b, DominanceMode::Weak, eps)?
    {
        Ok(Verdict::Holds)
    } else {
        Ok(Verdict::fails(FailureReason::DominatesNeither))
    }
}

/// Belief weight on `theta_prime` at which an agent with utility `u` is
/// indifferent between `x` and `y` on the two-state edge
/// `{theta, theta_prime}`. Closed form
/// `(u(x_t) - u(y_t)) / (u(x_t) - u(y_t) + u(y_t') - u(x_t'))`.
pub fn two_point_indifference(
    x: &[f64],
    y: &[f64],
    u: &UtilityFn,
    theta: usize,
    theta_prime: usize,
) -> Result<f64> {
    if theta >= x.len() || theta_prime >= x.len() || x.len() != y.len() {
        return Err(Error::Domain(format!(
            "state pair ({theta},{theta_prime}) out of range"
        )));
    }
    let num = u.eval(x[theta]) - u.eval(y[theta]);
    let den = num + u.eval(y[theta_prime]) - u.eval(x[theta_prime]);
    if den.abs() <= 1e-12 {
        return Err(Error::DegeneratePair(format!(
            "the two actions coincide in utility on states ({theta},{theta_prime})"
        )));
    }
    Ok(num / den)
}

/// Finds a belief weight `w` on `theta_prime` (the rest on `theta`) at which
/// the chain `E[a] > E[b] + eps` and `E[b] > E[ahat] + eps` holds under `u`,
/// if any does. Both sides are affine in `w`, so the feasible set is an
/// interval; the midpoint maximizes robustness.
fn edge_chain_weight(
    a: &[f64],
    b: &[f64],
    ahat: &[f64],
    u: &UtilityFn,
    theta: usize,
    theta_prime: usize,
    eps: f64,
) -> Option<f64> {
    let eval_pair = |x: &[f64]| (u.eval(x[theta]), u.eval(x[theta_prime]));
    let (a0, a1) = eval_pair(a);
    let (b0, b1) = eval_pair(b);
    let (h0, h1) = eval_pair(ahat);
    // g(w) > eps for affine g given by endpoint values (g(0), g(1))
    let constraint = |g0: f64, g1: f64| -> Option<(f64, f64)> {
        let d = g1 - g0;
        if d.abs() <= f64::EPSILON * (g0.abs() + g1.abs() + 1.0) {
            if g0 > eps {
                Some((0.0, 1.0))
            } else {
                None
            }
        } else {
            let t = (eps - g0) / d;
            if d > 0.0 {
                Some((t, f64::INFINITY))
            } else {
                Some((f64::NEG_INFINITY, t))
            }
        }
    };
    let (lo1, hi1) = constraint(a0 - b0, a1 - b1)?;
    let (lo2, hi2) = constraint(b0 - h0, b1 - h1)?;
    let lo = lo1.max(lo2).max(0.0);
    let hi = hi1.min(hi2).min(1.0);
    if lo >= hi {
        return None;
    }
    Some(0.5 * (lo + hi))
}

#[allow(clippy::too_many_arguments)]
fn try_edge_witness(
    a: &[f64],
    b: &[f64],
    ahat: &[f64],
    u: &UtilityFn,
    theta: usize,
    theta_prime: usize,
    claim: ViolatedClaim,
    eps: f64,
) -> Option<Witness> {
    let w = edge_chain_weight(a, b, ahat, u, theta, theta_prime, eps)?;
    let belief = Belief::two_point(a.len(), theta, theta_prime, w).ok()?;
    Witness::certify(a, &[b], ahat, u.clone(), belief, claim, eps).ok()
}

/// Risk-neutral cross-product test: on pair `(theta, theta_prime)` the
/// risk-neutral indifference beliefs are already ordered the wrong way when
/// this fails, so the identity utility witnesses the failure.
fn risk_neutral_order_ok(a: &[f64], b: &[f64], ahat: &[f64], t: usize, tp: usize) -> bool {
    (b[tp] - a[tp]) * (ahat[t] - b[t]) >= (a[t] - b[t]) * (b[tp] - ahat[tp])
}

/// Offending gain/loss pairs, most violated first. A pair offends when no
/// `lambda` in `[0,1]` lets `ahat` dominate the mixture on both its states.
fn offending_pairs(
    a: &[f64],
    b: &[f64],
    ahat: &[f64],
    part: &StatePartition,
) -> Vec<(usize, usize, f64)> {
    let mut pairs = Vec::new();
    for &t in &part.a_states {
        let upper = (1.0_f64).min((ahat[t] - b[t]) / (a[t] - b[t]));
        for &tp in &part.b_states {
            let lower = (0.0_f64).max((b[tp] - ahat[tp]) / (b[tp] - a[tp]));
            if lower > upper {
                pairs.push((t, tp, lower - upper));
            }
        }
    }
    pairs.sort_by(|x, y| y.2.partial_cmp(&x.2).unwrap());
    pairs
}

/// Geometric shrink schedule for the kink slope.
const IOTA_MAX_K: u32 = 60;

/// Constructs a certified witness that `ahat` is not b-superior to `a`.
///
/// Candidate constructions, tried in order of numerical robustness:
/// gain-state failures get a degenerate belief under the identity utility;
/// tie-state regressions get a two-point belief under the identity utility;
/// mixture violations on a gain/loss pair get either the identity utility
/// (when the risk-neutral indifference beliefs are already misordered) or a
/// concave utility kinked at `a`'s loss-state payoff with slope shrinking
/// geometrically until the indifference beliefs separate.
pub fn witness_not_b_superior(a: &[f64], b: &[f64], ahat: &[f64], eps: f64) -> Result<Witness> {
    if check_b_superior(a, b, ahat, eps)?.holds() {
        return Err(Error::RelationHolds);
    }
    let part = partition(a, b, eps)?;
    let identity = UtilityFn::identity();
    let claim = ViolatedClaim::NotBSuperior;

    // gain states where ahat drops strictly below b: point mass works
    let mut gain_failures: Vec<usize> = part
        .a_states
        .iter()
        .copied()
        .filter(|&t| ahat[t] < b[t] - eps)
        .collect();
    gain_failures.sort_by(|&x, &y| (b[y] - ahat[y]).partial_cmp(&(b[x] - ahat[x])).unwrap());
    for t in gain_failures {
        let belief = Belief::degenerate(a.len(), t)?;
        if let Ok(w) = Witness::certify(a, &[b], ahat, identity.clone(), belief, claim, eps) {
            return Ok(w);
        }
    }

    // tie-state regressions: mix the tie state with a gain state
    let mut gain_order = part.a_states.clone();
    gain_order.sort_by(|&x, &y| (a[y] - b[y]).partial_cmp(&(a[x] - b[x])).unwrap());
    for &td in &part.c_states {
        if ahat[td] < a[td] - eps {
            for &t in &gain_order {
                if let Some(w) = try_edge_witness(a, b, ahat, &identity, t, td, claim, eps) {
                    return Ok(w);
                }
            }
        }
    }

    // mixture violations on gain/loss pairs
    let pairs = offending_pairs(a, b, ahat, &part);
    let mut worst = None;
    for &(t, tp, gap) in &pairs {
        if worst.is_none() {
            worst = Some((t, tp, gap));
        }
        if !risk_neutral_order_ok(a, b, ahat, t, tp) {
            if let Some(w) = try_edge_witness(a, b, ahat, &identity, t, tp, claim, eps) {
                return Ok(w);
            }
            continue;
        }
        // risk-neutral beliefs ordered correctly: the violated pair then has
        // b < a < ahat at theta and ahat < a < b at theta_prime, and a kink
        // at a's loss payoff separates the indifference beliefs
        for k in 1..=IOTA_MAX_K {
            let iota = (2.0_f64).powi(-(k as i32));
            let Ok(u) = UtilityFn::kinked_above(a[tp], iota) else {
                break;
            };
            let mu_bar = two_point_indifference(a, b, &u, t, tp);
            let mu_hat = two_point_indifference(ahat, b, &u, t, tp);
            if let (Ok(mu_bar), Ok(mu_hat)) = (mu_bar, mu_hat) {
                if mu_bar > mu_hat + eps {
                    if let Some(w) = try_edge_witness(a, b, ahat, &u, t, tp, claim, eps) {
                        return Ok(w);
                    }
                }
            }
        }
    }

    // last resort: identity on every offending pair regardless of the order test
    for &(t, tp, _) in &pairs {
        if let Some(w) = try_edge_witness(a, b, ahat, &identity, t, tp, claim, eps) {
            return Ok(w);
        }
    }

    match worst {
        Some((t, tp, gap)) => Err(Error::Numerical(format!(
            "kink slope underflowed before the indifference beliefs separated \
             on pair ({t},{tp}) with interval gap {gap:.3e}"
        ))),
        None => Err(Error::Numerical(
            "check fails only by tolerance-level ties; no strict certificate exists \
             at this epsilon"
                .into(),
        )),
    }
}

/// Constructs a certified witness that `ahat` is not b-better than `a`.
///
/// When `ahat` is not even b-superior this delegates to the concave
/// construction (a concave utility is in particular monotone). Otherwise the
/// failure is dominance of neither action, and a convex kink below `ahat`'s
/// gain-state payoff separates the indifference beliefs.
pub fn witness_not_b_better(a: &[f64], b: &[f64], ahat: &[f64], eps: f64) -> Result<Witness> {
    if check_b_better(a, b, ahat, eps)?.holds() {
        return Err(Error::RelationHolds);
    }
    let claim = ViolatedClaim::NotBBetter;
    if !check_b_superior(a, b, ahat, eps)?.holds() {
        let w = witness_not_b_superior(a, b, ahat, eps)?;
        return Witness::certify(a, &[b], ahat, w.utility, w.belief, claim, eps);
    }
    let part = partition(a, b, eps)?;
    // pairs with b < ahat < a at theta and ahat < b at theta_prime
    let mut pairs = Vec::new();
    for &t in &part.a_states {
        if ahat[t] < a[t] - eps {
            for &tp in &part.b_states {
                if ahat[tp] < b[tp] - eps {
                    let margin = (a[t] - ahat[t]).min(b[tp] - ahat[tp]);
                    pairs.push((t, tp, margin));
                }
            }
        }
    }
    pairs.sort_by(|x, y| y.2.partial_cmp(&x.2).unwrap());
    for &(t, tp, _) in &pairs {
        for k in 1..=IOTA_MAX_K {
            let iota = (2.0_f64).powi(-(k as i32));
            let Ok(u) = UtilityFn::kinked_below(ahat[t], iota) else {
                break;
            };
            let mu_bar = two_point_indifference(a, b, &u, t, tp);
            let mu_hat = two_point_indifference(ahat, b, &u, t, tp);
            if let (Ok(mu_bar), Ok(mu_hat)) = (mu_bar, mu_hat) {
                if mu_bar > mu_hat + eps {
                    if let Some(w) = try_edge_witness(a, b, ahat, &u, t, tp, claim, eps) {
                        return Ok(w);
                    }
                }
            }
        }
    }
    Err(Error::Numerical(
        "no convex-kink certificate separated the indifference beliefs".into(),
    ))
}
