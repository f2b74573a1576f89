//! Endogenous information: flexible learning before a binary choice.
//!
//! The agent pays a uniformly posterior-separable cost to pick a Bayes-
//! plausible distribution over posteriors, then takes the better action at
//! each posterior. With two states the optimal signal is supported on at
//! most two posteriors `mu_l < mu_h` characterized by a smooth-pasting
//! first-order system in the cost potential:
//!
//! ```text
//! alpha1 - alpha0 - c'(mu_l) + c'(mu_h) = 0
//! c'(mu_l) mu_l - c'(mu_h) mu_h + c(mu_h) + alpha0 - c(mu_l) = 0
//! ```
//!
//! where `alpha_theta` is the focal action's utility with the alternative
//! normalized to zero. Whether a candidate is *selected more* than the
//! incumbent for every prior, cost, and concave utility turns out to be
//! pure statewise dominance, and with three states even dominance stops
//! being enough; `reproduce_three_state` replays that counterexample in
//! exact rational arithmetic.

use num::rational::Ratio;
use num::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{dominates, partition, Belief, DominanceMode};
use crate::superiority::{FailureReason, Verdict};
use crate::utility::UtilityFn;

pub type Rational = Ratio<i64>;

/// Posterior-separable cost potential on the two-state belief interval.
/// Must be strictly convex and twice differentiable on (0,1).
pub trait CostPotential: Send + Sync {
    fn value(&self, mu: f64) -> f64;
    fn derivative(&self, mu: f64) -> f64;
    fn second_derivative(&self, mu: f64) -> f64;

    /// Probes strict convexity on a grid of 1000 interior points.
    fn validate(&self) -> Result<()> {
        for i in 1..=1000 {
            let mu = i as f64 / 1001.0;
            if !(self.second_derivative(mu) > 0.0) {
                return Err(Error::Invalid {
                    what: "cost potential",
                    detail: format!("second derivative not positive at mu = {mu}"),
                });
            }
        }
        Ok(())
    }
}

/// Scaled negative Shannon entropy `kappa (mu ln mu + (1-mu) ln(1-mu))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EntropyCost {
    pub kappa: f64,
}

impl EntropyCost {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Invalid {
                what: "cost potential",
                detail: format!("scale must be positive, got {kappa}"),
            });
        }
        Ok(Self { kappa })
    }
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

impl CostPotential for EntropyCost {
    fn value(&self, mu: f64) -> f64 {
        self.kappa * (xlogx(mu) + xlogx(1.0 - mu))
    }

    fn derivative(&self, mu: f64) -> f64 {
        self.kappa * (mu.ln() - (1.0 - mu).ln())
    }

    fn second_derivative(&self, mu: f64) -> f64 {
        self.kappa / (mu * (1.0 - mu))
    }
}

/// Which action a posterior is assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanChoice {
    Focal,
    Alternative,
}

/// An optimal learning plan: support posteriors, their weights, the action
/// taken at each, and the focal action's total choice probability.
#[derive(Debug, Clone, Serialize)]
pub struct PosteriorPlan {
    pub posteriors: Vec<Belief>,
    pub weights: Vec<f64>,
    pub action_at: Vec<PlanChoice>,
    pub p_focal: f64,
}

impl PosteriorPlan {
    fn new(
        posteriors: Vec<Belief>,
        weights: Vec<f64>,
        action_at: Vec<PlanChoice>,
        prior: &[f64],
    ) -> Result<Self> {
        if posteriors.len() != weights.len() || weights.len() != action_at.len() {
            return Err(Error::DimensionMismatch {
                expected: posteriors.len(),
                got: weights.len(),
            });
        }
        let wsum: f64 = weights.iter().sum();
        if (wsum - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid {
                what: "posterior plan",
                detail: format!("weights sum to {wsum}"),
            });
        }
        for (k, &target) in prior.iter().enumerate() {
            let avg: f64 = posteriors
                .iter()
                .zip(&weights)
                .map(|(b, &w)| w * b.probs()[k])
                .sum();
            if (avg - target).abs() > 1e-12 {
                return Err(Error::Invalid {
                    what: "posterior plan",
                    detail: format!(
                        "Bayes plausibility fails on coordinate {k}: {avg} vs {target}"
                    ),
                });
            }
        }
        let p_focal = weights
            .iter()
            .zip(&action_at)
            .filter(|(_, c)| **c == PlanChoice::Focal)
            .map(|(&w, _)| w)
            .sum();
        Ok(Self {
            posteriors,
            weights,
            action_at,
            p_focal,
        })
    }
}

/// Interior solution of the two-posterior first-order system.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InteriorSolution {
    pub mu_l: f64,
    pub mu_h: f64,
}

/// Closed-form derivatives of the interior posteriors in the two payoffs,
/// obtained from the first-order system by the implicit function theorem.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FocSensitivities {
    pub dmu_l_dalpha0: f64,
    pub dmu_h_dalpha0: f64,
    pub dmu_l_dalpha1: f64,
    pub dmu_h_dalpha1: f64,
}

pub fn interior_sensitivities(
    sol: &InteriorSolution,
    cost: &dyn CostPotential,
) -> FocSensitivities {
    let d = sol.mu_h - sol.mu_l;
    let c2l = cost.second_derivative(sol.mu_l);
    let c2h = cost.second_derivative(sol.mu_h);
    FocSensitivities {
        dmu_l_dalpha0: (1.0 - sol.mu_h) / (c2l * d),
        dmu_h_dalpha0: (1.0 - sol.mu_l) / (c2h * d),
        dmu_l_dalpha1: sol.mu_h / (c2l * d),
        dmu_h_dalpha1: sol.mu_l / (c2h * d),
    }
}

const MU_MIN: f64 = 1e-15;
const MU_MAX: f64 = 1.0 - 1e-15;
const RESIDUAL_TARGET: f64 = 1e-10;

fn focs(alpha0: f64, alpha1: f64, cost: &dyn CostPotential, ml: f64, mh: f64) -> (f64, f64) {
    let f1 = alpha1 - alpha0 - cost.derivative(ml) + cost.derivative(mh);
    let f2 = cost.derivative(ml) * ml - cost.derivative(mh) * mh + cost.value(mh) + alpha0
        - cost.value(ml);
    (f1, f2)
}

fn invert_derivative(cost: &dyn CostPotential, target: f64, lo: f64, hi: f64) -> Option<f64> {
    let (mut lo, mut hi) = (lo, hi);
    if cost.derivative(lo) > target || cost.derivative(hi) < target {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cost.derivative(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn bisection_fallback(
    alpha0: f64,
    alpha1: f64,
    cost: &dyn CostPotential,
) -> Result<InteriorSolution> {
    let gap = alpha0 - alpha1;
    let mu_bar = alpha0 / (alpha0 - alpha1);
    let mh_of = |ml: f64| invert_derivative(cost, cost.derivative(ml) + gap, ml, MU_MAX);
    let g = |ml: f64| -> Option<f64> {
        let mh = mh_of(ml)?;
        Some(focs(alpha0, alpha1, cost, ml, mh).1)
    };
    let mut grid: Vec<f64> = (1..400).map(|i| mu_bar * i as f64 / 400.0).collect();
    for k in 1..=13 {
        grid.push(mu_bar * (10.0_f64).powi(-k));
    }
    grid.retain(|&x| x > MU_MIN && x < MU_MAX);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for &ml in &grid {
        if let Some(val) = g(ml) {
            if let Some((pml, pval)) = prev {
                if pval.signum() != val.signum() {
                    bracket = Some((pml, ml));
                    break;
                }
            }
            prev = Some((ml, val));
        }
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Err(Error::Numerical(format!(
            "no sign change of the smooth-pasting residual on ({MU_MIN:.0e}, {mu_bar:.6}); \
             the interior solution may lie outside the representable belief window"
        )));
    };
    let lo_sign = g(lo).map(f64::signum).unwrap_or(1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match g(mid) {
            Some(v) if v.signum() == lo_sign => lo = mid,
            Some(_) => hi = mid,
            None => break,
        }
    }
    let ml = 0.5 * (lo + hi);
    let mh = mh_of(ml).ok_or_else(|| {
        Error::Numerical("upper posterior left the representable belief window".into())
    })?;
    let (f1, f2) = focs(alpha0, alpha1, cost, ml, mh);
    if f1.abs().max(f2.abs()) > RESIDUAL_TARGET {
        return Err(Error::Numerical(format!(
            "bisection fallback stalled at residuals ({f1:.3e}, {f2:.3e}) with bracket \
             [{lo:.12}, {hi:.12}]"
        )));
    }
    Ok(InteriorSolution { mu_l: ml, mu_h: mh })
}

/// Solves the two-posterior first-order system by damped Newton iteration
/// with a bisection fallback riding on the strict monotonicity of `c'`.
pub fn solve_focs(alpha0: f64, alpha1: f64, cost: &dyn CostPotential) -> Result<InteriorSolution> {
    if !(alpha0 > 0.0 && alpha1 < 0.0) {
        return Err(Error::Domain(format!(
            "need alpha0 > 0 > alpha1, got ({alpha0}, {alpha1})"
        )));
    }
    let mu_bar = alpha0 / (alpha0 - alpha1);
    let mut ml = (0.5 * mu_bar).clamp(MU_MIN, MU_MAX);
    let mut mh = (mu_bar + 0.5 * (1.0 - mu_bar)).clamp(MU_MIN, MU_MAX);
    let mut res = {
        let (f1, f2) = focs(alpha0, alpha1, cost, ml, mh);
        f1.abs().max(f2.abs())
    };
    for _ in 0..200 {
        if res < 1e-12 {
            break;
        }
        let (f1, f2) = focs(alpha0, alpha1, cost, ml, mh);
        let c2l = cost.second_derivative(ml);
        let c2h = cost.second_derivative(mh);
        let det = c2l * c2h * (mh - ml);
        if !det.is_finite() || det.abs() < 1e-300 {
            break;
        }
        // J = [[-c2l, c2h], [c2l*ml, -c2h*mh]], solve J d = -F by Cramer
        let dl = c2h * (mh * f1 + f2) / det;
        let dh = c2l * (ml * f1 + f2) / det;
        let mut t = 1.0;
        let mut stepped = false;
        for _ in 0..60 {
            let nl = ml + t * dl;
            let nh = mh + t * dh;
            if nl > MU_MIN && nh < MU_MAX && nl < nh {
                let (g1, g2) = focs(alpha0, alpha1, cost, nl, nh);
                let nres = g1.abs().max(g2.abs());
                if nres < res {
                    ml = nl;
                    mh = nh;
                    res = nres;
                    stepped = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !stepped {
            break;
        }
    }
    if res <= RESIDUAL_TARGET {
        return Ok(InteriorSolution { mu_l: ml, mu_h: mh });
    }
    bisection_fallback(alpha0, alpha1, cost)
}

/// No-learning test: the tangent line through the chosen
/// action's value at the prior must stay above the rival's line on all of
/// `[0,1]`; the expression is affine in the posterior, so the endpoints
/// decide.
fn corner_choose_focal(alpha0: f64, alpha1: f64, cost: &dyn CostPotential, mu0: f64) -> bool {
    let line = alpha0 + (alpha1 - alpha0) * mu0;
    if line < 0.0 {
        return false;
    }
    let d = cost.derivative(mu0);
    let at0 = d * mu0 + alpha0;
    let at1 = alpha1 + d * (mu0 - 1.0);
    at0 >= 0.0 && at1 >= 0.0
}

fn corner_choose_alternative(alpha0: f64, alpha1: f64, cost: &dyn CostPotential, mu0: f64) -> bool {
    let line = alpha0 + (alpha1 - alpha0) * mu0;
    if line > 0.0 {
        return false;
    }
    let d = cost.derivative(mu0);
    let at0 = alpha0 - d * mu0;
    let at1 = alpha1 + d * (1.0 - mu0);
    at0 <= 0.0 && at1 <= 0.0
}

fn two_state_belief(mu: f64) -> Result<Belief> {
    Belief::new(vec![1.0 - mu, mu])
}

fn degenerate_plan(alpha0: f64, alpha1: f64, mu0: f64) -> Result<PosteriorPlan> {
    let line = alpha0 + (alpha1 - alpha0) * mu0;
    let choice = if line >= 0.0 {
        PlanChoice::Focal
    } else {
        PlanChoice::Alternative
    };
    PosteriorPlan::new(
        vec![two_state_belief(mu0)?],
        vec![1.0],
        vec![choice],
        &[1.0 - mu0, mu0],
    )
}

/// Optimal learning plan for the menu {focal, alternative} where the focal
/// action pays `alpha0 > 0` in state 0 and `alpha1 < 0` in state 1 (in
/// utils, alternative normalized to zero) and `mu0` is the prior
/// probability of state 1.
///
/// Tests the no-learning corners first; otherwise solves the interior
/// system and splits the prior across the two posteriors, falling back to
/// the no-learning plan when the prior lies outside their span.
pub fn solve_two_state(
    alpha0: f64,
    alpha1: f64,
    cost: &dyn CostPotential,
    mu0: f64,
) -> Result<PosteriorPlan> {
    if !(alpha0 > 0.0 && alpha1 < 0.0) {
        return Err(Error::Domain(format!(
            "focal action must be uniquely optimal in state 0 and the alternative in \
             state 1: need alpha0 > 0 > alpha1, got ({alpha0}, {alpha1})"
        )));
    }
    if !(mu0 > 0.0 && mu0 < 1.0) {
        return Err(Error::Domain(format!("prior {mu0} outside (0,1)")));
    }
    cost.validate()?;
    if corner_choose_focal(alpha0, alpha1, cost, mu0)
        || corner_choose_alternative(alpha0, alpha1, cost, mu0)
    {
        return degenerate_plan(alpha0, alpha1, mu0);
    }
    let sol = solve_focs(alpha0, alpha1, cost)?;
    if mu0 > sol.mu_l && mu0 < sol.mu_h {
        let p = (sol.mu_h - mu0) / (sol.mu_h - sol.mu_l);
        let line_at = |mu: f64| alpha0 + (alpha1 - alpha0) * mu;
        let choice_at = |mu: f64| {
            if line_at(mu) >= 0.0 {
                PlanChoice::Focal
            } else {
                PlanChoice::Alternative
            }
        };
        PosteriorPlan::new(
            vec![two_state_belief(sol.mu_l)?, two_state_belief(sol.mu_h)?],
            vec![p, 1.0 - p],
            vec![choice_at(sol.mu_l), choice_at(sol.mu_h)],
            &[1.0 - mu0, mu0],
        )
    } else {
        degenerate_plan(alpha0, alpha1, mu0)
    }
}

/// Is the candidate selected at least as often as the incumbent for every
/// posterior-separable cost, every interior prior, and every concave
/// utility? For two states this is statewise dominance of the incumbent or
/// of the alternative, nothing weaker.
pub fn check_selected_more(a: &[f64], b: &[f64], ahat: &[f64], eps: f64) -> Result<Verdict> {
    if a.len() != 2 || b.len() != 2 || ahat.len() != 2 {
        return Err(Error::Domain(
            "the selected-more characterization is stated for exactly two states".into(),
        ));
    }
    let part = partition(a, b, eps)?;
    if part.a_states.is_empty() || part.b_states.is_empty() {
        return Err(Error::Assumption(
            "one of the paired actions statewise dominates the other".into(),
        ));
    }
    if dominates(ahat, a, DominanceMode::Weak, eps)?
        || dominates(ahat, b, DominanceMode::Weak, eps)?
    {
        Ok(Verdict::Holds)
    } else {
        Ok(Verdict::fails(FailureReason::DominatesNeither))
    }
}

fn menu_choice_probability(
    gain: f64,
    loss: f64,
    cost: &dyn CostPotential,
    mu0: f64,
) -> Result<f64> {
    if gain >= 0.0 && loss >= 0.0 {
        // weakly dominates the alternative; ties go to the focal action
        return Ok(1.0);
    }
    if gain <= 0.0 && loss <= 0.0 {
        return Ok(if gain == 0.0 && loss == 0.0 { 1.0 } else { 0.0 });
    }
    if gain > 0.0 {
        Ok(solve_two_state(gain, loss, cost, mu0)?.p_focal)
    } else {
        // the focal action wins in state 1: relabel the states
        Ok(solve_two_state(loss, gain, cost, 1.0 - mu0)?.p_focal)
    }
}

/// Choice probabilities of the incumbent and the candidate against the same
/// alternative, cost, utility, and prior: the diagnostic companion to
/// [`check_selected_more`].
pub fn selection_comparison(
    a: &[f64],
    b: &[f64],
    ahat: &[f64],
    u: &UtilityFn,
    cost: &dyn CostPotential,
    mu0: f64,
) -> Result<(f64, f64)> {
    if a.len() != 2 || b.len() != 2 || ahat.len() != 2 {
        return Err(Error::Domain(
            "selection comparison needs two states".into(),
        ));
    }
    if !(mu0 > 0.0 && mu0 < 1.0) {
        return Err(Error::Domain(format!("prior {mu0} outside (0,1)")));
    }
    let norm = |x: &[f64]| [u.eval(x[0]) - u.eval(b[0]), u.eval(x[1]) - u.eval(b[1])];
    let alpha = norm(a);
    if !(alpha[0] > 0.0 && alpha[1] < 0.0 || alpha[0] < 0.0 && alpha[1] > 0.0) {
        return Err(Error::Assumption(
            "incumbent and alternative must not dominate each other in utility".into(),
        ));
    }
    let alpha_hat = norm(ahat);
    let p = menu_choice_probability(alpha[0], alpha[1], cost, mu0)?;
    let p_hat = menu_choice_probability(alpha_hat[0], alpha_hat[1], cost, mu0)?;
    Ok((p, p_hat))
}

fn rational_weight_on_first(
    first: &[Rational],
    second: &[Rational],
    target: &[Rational],
) -> Result<Rational> {
    let mut solved: Option<Rational> = None;
    for k in 0..target.len() {
        let den = second[k] - first[k];
        if den.is_zero() {
            if second[k] != target[k] {
                return Err(Error::DataInconsistent(format!(
                    "coordinate {k} is constant across posteriors but misses the prior"
                )));
            }
            continue;
        }
        let w = (second[k] - target[k]) / den;
        match solved {
            None => solved = Some(w),
            Some(prev) if prev != w => {
                return Err(Error::DataInconsistent(format!(
                    "coordinate {k} solves to weight {w}, earlier coordinates gave {prev}"
                )));
            }
            Some(_) => {}
        }
    }
    let w = solved.ok_or_else(|| {
        Error::DataInconsistent("posteriors coincide; the weight is undetermined".into())
    })?;
    if w < Rational::zero() || w > Rational::new(1, 1) {
        return Err(Error::DataInconsistent(format!("weight {w} outside [0,1]")));
    }
    Ok(w)
}

/// Replays the fixed three-state example in exact rational arithmetic:
/// a candidate that statewise dominates the incumbent is nevertheless
/// selected less often. Returns the two choice probabilities
/// `(p, p_hat) = (33/40, 3/4)`.
///
/// The posterior supports are taken as given data; Bayes plausibility pins
/// the weights, and the value functions `max(mu2 - mu1, 0)` and
/// `max(3/2 mu2 - mu1, 0)` assign actions (ties to the focal action).
pub fn reproduce_three_state() -> Result<(Rational, Rational)> {
    let q = Rational::new;
    // coordinates are (P(state 1), P(state 2))
    let prior = [q(3, 20), q(1, 5)];
    let menu_a = [[q(2, 25), q(1, 5)], [q(12, 25), q(1, 5)]];
    let menu_ahat = [[q(1, 50), q(53, 200)], [q(27, 50), q(1, 200)]];

    for post in menu_a.iter().chain(menu_ahat.iter()) {
        let rest = Rational::new(1, 1) - post[0] - post[1];
        if post[0] < Rational::zero() || post[1] < Rational::zero() || rest < Rational::zero() {
            return Err(Error::DataInconsistent(format!(
                "posterior {post:?} leaves the simplex"
            )));
        }
    }

    let value_a = |post: &[Rational; 2]| post[1] - post[0];
    let value_ahat = |post: &[Rational; 2]| q(3, 2) * post[1] - post[0];

    let w_a = rational_weight_on_first(&menu_a[0], &menu_a[1], &prior)?;
    let p = if value_a(&menu_a[0]) >= Rational::zero() {
        w_a
    } else {
        Rational::new(1, 1) - w_a
    };

    let w_h = rational_weight_on_first(&menu_ahat[0], &menu_ahat[1], &prior)?;
    let p_hat = if value_ahat(&menu_ahat[0]) >= Rational::zero() {
        w_h
    } else {
        Rational::new(1, 1) - w_h
    };

    Ok((p, p_hat))
}
