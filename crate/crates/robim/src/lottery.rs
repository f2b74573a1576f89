//! Known-belief case: how to make a lottery better.
//!
//! Once the belief is fixed, each action induces a finite lottery over
//! money, and robustness over the remaining utility uncertainty reduces to
//! stochastic dominance: first-order for monotone agents, second-order for
//! risk-averse ones. The candidate lottery improves against the alternative
//! set exactly when, for every alternative `b`, some convex weighting of
//! the other alternatives mixed with the candidate dominates the same
//! weighting of the incumbent mixed with `b`. Each dominance constraint is
//! linear in the weights, so the question is a small LP feasibility problem
//! per alternative.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::Belief;
use crate::UtilityClass;

pub use crate::simplex::{lp_feasible, Feasibility};

/// Payouts closer than this merge into one atom.
const MERGE_TOL: f64 = 1e-12;

/// A finite lottery: sorted, merged (payout, probability) atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lottery {
    atoms: Vec<(f64, f64)>,
}

impl Lottery {
    /// Probabilities must be nonnegative and sum to 1 within 1e-12. Atoms
    /// with equal payouts merge; zero-probability atoms drop out.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Invalid {
                what: "lottery",
                detail: "no atoms".into(),
            });
        }
        for &(x, p) in &atoms {
            if !x.is_finite() || !p.is_finite() || p < 0.0 {
                return Err(Error::Invalid {
                    what: "lottery",
                    detail: format!("bad atom ({x}, {p})"),
                });
            }
        }
        let total: f64 = atoms.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid {
                what: "lottery",
                detail: format!("probabilities sum to {total}, not 1"),
            });
        }
        let mut sorted = atoms;
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (x, p) in sorted {
            match merged.last_mut() {
                Some(last) if (x - last.0).abs() <= MERGE_TOL => last.1 += p,
                _ => merged.push((x, p)),
            }
        }
        merged.retain(|&(_, p)| p > 0.0);
        Ok(Self { atoms: merged })
    }

    /// The lottery an action induces under a fixed belief.
    pub fn induce(payoffs: &[f64], belief: &Belief) -> Result<Self> {
        if payoffs.len() != belief.n() {
            return Err(Error::DimensionMismatch {
                expected: belief.n(),
                got: payoffs.len(),
            });
        }
        Self::new(
            payoffs
                .iter()
                .copied()
                .zip(belief.probs().iter().copied())
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(x, p)| x * p).sum()
    }

    /// `P(X <= t)`, with the merge tolerance on the boundary.
    pub fn cdf(&self, t: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|&&(x, _)| x <= t + MERGE_TOL)
            .map(|&(_, p)| p)
            .sum()
    }

    /// Integrated CDF `E[(t - X)^+]`; piecewise linear with kinks only at
    /// support points.
    pub fn deficit(&self, t: f64) -> f64 {
        self.atoms.iter().map(|&(x, p)| p * (t - x).max(0.0)).sum()
    }

    /// Convex combination of lotteries. Weights must be nonnegative and sum
    /// to 1 within 1e-9.
    pub fn mix(parts: &[(f64, &Lottery)]) -> Result<Self> {
        let total: f64 = parts.iter().map(|&(w, _)| w).sum();
        if parts.is_empty() || (total - 1.0).abs() > 1e-9 || parts.iter().any(|&(w, _)| w < 0.0) {
            return Err(Error::Invalid {
                what: "lottery mixture",
                detail: format!("weights must be nonnegative and sum to 1, got total {total}"),
            });
        }
        let mut atoms = Vec::new();
        for &(w, l) in parts {
            if w == 0.0 {
                continue;
            }
            atoms.extend(l.atoms.iter().map(|&(x, p)| (x, w * p)));
        }
        // renormalize the float dust so validation stays exact
        let sum: f64 = atoms.iter().map(|&(_, p)| p).sum();
        for a in atoms.iter_mut() {
            a.1 /= sum;
        }
        Self::new(atoms)
    }
}

fn merged_support(lotteries: &[&Lottery]) -> Vec<f64> {
    let mut pts: Vec<f64> = lotteries
        .iter()
        .flat_map(|l| l.atoms.iter().map(|&(x, _)| x))
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);
    pts
}

/// First-order stochastic dominance of `x` over `y`: the CDF of `x` lies
/// weakly below `y`'s at every merged support point.
pub fn fosd(x: &Lottery, y: &Lottery, eps: f64) -> bool {
    merged_support(&[x, y])
        .iter()
        .all(|&t| x.cdf(t) <= y.cdf(t) + eps)
}

/// Second-order stochastic dominance of `x` over `y`: the integrated CDF of
/// `x` lies weakly below `y`'s at every merged support point. Both
/// integrals are piecewise linear with kinks only at support points, so
/// checking there is exact.
pub fn sosd(x: &Lottery, y: &Lottery, eps: f64) -> bool {
    merged_support(&[x, y])
        .iter()
        .all(|&t| x.deficit(t) <= y.deficit(t) + eps)
}

fn dominance_holds(x: &Lottery, y: &Lottery, class: UtilityClass, eps: f64) -> bool {
    match class {
        UtilityClass::Monotone => fosd(x, y, eps),
        UtilityClass::RiskAverse => sosd(x, y, eps),
    }
}

/// Convex weight over the alternatives: nonnegative entries with sum at
/// most 1; the remainder falls on the candidate lottery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexWeight {
    pub weights: Vec<f64>,
}

impl ConvexWeight {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < -1e-12) || sum > 1.0 + 1e-9 {
            return Err(Error::Invalid {
                what: "convex weight",
                detail: format!("weights {weights:?} (sum {sum})"),
            });
        }
        Ok(Self {
            weights: weights.iter().map(|&w| w.max(0.0)).collect(),
        })
    }

    pub fn tail(&self) -> f64 {
        (1.0 - self.weights.iter().sum::<f64>()).max(0.0)
    }
}

/// Per-alternative outcome of the improvement check.
#[derive(Debug, Clone, Serialize)]
pub struct AlternativeOutcome {
    pub feasible: bool,
    pub weight: Option<ConvexWeight>,
    /// Set when the phase-1 residual was within 1e-6 of feasibility: the
    /// verdict is numerically fragile.
    pub borderline: bool,
}

/// Result of [`check_b_improves`].
#[derive(Debug, Clone, Serialize)]
pub struct BImprovesReport {
    pub holds: bool,
    pub per_alternative: Vec<AlternativeOutcome>,
}

const BORDERLINE_RESIDUAL: f64 = 1e-6;

/// Does the candidate lottery improve upon `l_a` against every alternative,
/// for all utilities in `class`? For each alternative `b` the check finds a
/// convex weight `lambda` with
/// `sum_i lambda_i L_i + (1 - sum lambda) L_ahat` dominating
/// `sum_i lambda_i L_a + (1 - sum lambda) L_b`, or proves none exists.
/// Returned weights are re-validated by direct substitution.
pub fn check_b_improves(
    l_a: &Lottery,
    l_ahat: &Lottery,
    others: &[Lottery],
    class: UtilityClass,
    eps: f64,
) -> Result<BImprovesReport> {
    let m = others.len();
    if m == 0 {
        return Err(Error::Domain(
            "need at least one alternative lottery".into(),
        ));
    }
    let mut all: Vec<&Lottery> = vec![l_a, l_ahat];
    all.extend(others.iter());
    let grid = merged_support(&all);
    let stat = |l: &Lottery, t: f64| match class {
        UtilityClass::Monotone => l.cdf(t),
        UtilityClass::RiskAverse => l.deficit(t),
    };

    let mut per_alternative = Vec::with_capacity(m);
    let mut holds = true;
    for b in others {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(grid.len() + 1);
        let mut rhs: Vec<f64> = Vec::with_capacity(grid.len() + 1);
        for &t in &grid {
            let base = stat(l_ahat, t);
            let row: Vec<f64> = others
                .iter()
                .map(|li| stat(li, t) - base - stat(l_a, t) + stat(b, t))
                .collect();
            rows.push(row);
            rhs.push(stat(b, t) - base);
        }
        rows.push(vec![1.0; m]);
        rhs.push(1.0);

        match lp_feasible(&rows, &rhs)? {
            Feasibility::Feasible(lambda) => {
                let weight = ConvexWeight::new(lambda)?;
                let mut lhs_parts: Vec<(f64, &Lottery)> =
                    weight.weights.iter().copied().zip(others.iter()).collect();
                lhs_parts.push((weight.tail(), l_ahat));
                let mut rhs_parts: Vec<(f64, &Lottery)> = weight
                    .weights
                    .iter()
                    .copied()
                    .zip(std::iter::repeat(l_a))
                    .collect();
                rhs_parts.push((weight.tail(), b));
                let lhs = Lottery::mix(&lhs_parts)?;
                let rhs_mix = Lottery::mix(&rhs_parts)?;
                if !dominance_holds(&lhs, &rhs_mix, class, eps.max(1e-9)) {
                    return Err(Error::Numerical(
                        "LP-feasible weight failed the direct dominance recheck".into(),
                    ));
                }
                per_alternative.push(AlternativeOutcome {
                    feasible: true,
                    weight: Some(weight),
                    borderline: false,
                });
            }
            Feasibility::Infeasible { residual } => {
                holds = false;
                per_alternative.push(AlternativeOutcome {
                    feasible: false,
                    weight: None,
                    borderline: residual <= BORDERLINE_RESIDUAL,
                });
            }
        }
    }
    Ok(BImprovesReport {
        holds,
        per_alternative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lot(atoms: &[(f64, f64)]) -> Lottery {
        Lottery::new(atoms.to_vec()).unwrap()
    }

    #[test]
    fn induce_merges_equal_payouts() {
        let mu = Belief::new(vec![0.2, 0.5, 0.3]).unwrap();
        let l = Lottery::induce(&[0.0, 1.0, 0.0], &mu).unwrap();
        assert_eq!(l.atoms(), &[(0.0, 0.5), (1.0, 0.5)]);

        let mu = Belief::new(vec![0.75, 0.25]).unwrap();
        let l = Lottery::induce(&[1.0, 0.0], &mu).unwrap();
        assert_eq!(l.atoms(), &[(0.0, 0.25), (1.0, 0.75)]);

        let mu = Belief::new(vec![0.6, 0.4]).unwrap();
        let l = Lottery::induce(&[1.0, 1.0], &mu).unwrap();
        assert_eq!(l.atoms(), &[(1.0, 1.0)]);
    }

    #[test]
    fn fosd_basic() {
        let eps = 1e-9;
        let x = lot(&[(0.0, 0.3), (1.0, 0.7)]);
        let y = lot(&[(0.0, 0.5), (1.0, 0.5)]);
        assert!(fosd(&x, &y, eps));
        assert!(!fosd(&y, &x, eps));
        assert!(fosd(&x, &x, eps) && sosd(&x, &x, eps));
    }

    #[test]
    fn mean_preserving_contraction_is_sosd_not_fosd() {
        let eps = 1e-9;
        let x = lot(&[(0.5, 1.0)]);
        let y = lot(&[(0.0, 0.5), (1.0, 0.5)]);
        assert!(sosd(&x, &y, eps));
        assert!(!fosd(&x, &y, eps));
    }

    #[test]
    fn identical_candidate_is_feasible() {
        let l_a = lot(&[(0.0, 0.25), (1.0, 0.75)]);
        let others = vec![lot(&[(0.0, 0.75), (1.0, 0.25)])];
        let report =
            check_b_improves(&l_a, &l_a.clone(), &others, UtilityClass::RiskAverse, 1e-9).unwrap();
        assert!(report.holds);
        // the half weight equates the two sides exactly
        let w = ConvexWeight::new(vec![0.5]).unwrap();
        let lhs = Lottery::mix(&[(0.5, &others[0]), (0.5, &l_a)]).unwrap();
        let rhs = Lottery::mix(&[(0.5, &l_a), (0.5, &others[0])]).unwrap();
        assert!(sosd(&lhs, &rhs, 1e-12));
        assert!(w.tail() == 0.5);
    }

    #[test]
    fn fosd_dominating_candidate_is_feasible_with_zero_weight() {
        let l_a = lot(&[(0.0, 0.5), (2.0, 0.5)]);
        let l_b = lot(&[(0.0, 0.5), (1.0, 0.5)]);
        let l_ahat = lot(&[(0.5, 0.5), (1.5, 0.5)]);
        assert!(fosd(&l_ahat, &l_b, 1e-9));
        let report = check_b_improves(&l_a, &l_ahat, &[l_b], UtilityClass::Monotone, 1e-9).unwrap();
        assert!(report.holds);
    }

    #[test]
    fn sure_payment_above_alternative_mean() {
        // a risk-averse agent who picked the risky a over b must accept the
        // sure 0.55
        let l_a = lot(&[(0.0, 0.25), (1.0, 0.75)]);
        let l_b = lot(&[(0.0, 0.75), (1.0, 0.25)]);
        let l_ahat = lot(&[(0.55, 1.0)]);
        let report = check_b_improves(
            &l_a,
            &l_ahat,
            std::slice::from_ref(&l_b),
            UtilityClass::RiskAverse,
            1e-9,
        )
        .unwrap();
        assert!(report.holds);
        let w = report.per_alternative[0].weight.as_ref().unwrap();
        // substitute the certificate back in
        let lhs = Lottery::mix(&[(w.weights[0], &l_b), (w.tail(), &l_ahat)]).unwrap();
        let rhs = Lottery::mix(&[(w.weights[0], &l_a), (w.tail(), &l_b)]).unwrap();
        assert!(sosd(&lhs, &rhs, 1e-9));
    }

    #[test]
    fn hopeless_candidate_is_infeasible() {
        let l_a = lot(&[(1.0, 1.0)]);
        let l_b = lot(&[(0.5, 1.0)]);
        let l_ahat = lot(&[(0.0, 1.0)]);
        for class in [UtilityClass::Monotone, UtilityClass::RiskAverse] {
            let report =
                check_b_improves(&l_a, &l_ahat, std::slice::from_ref(&l_b), class, 1e-9).unwrap();
            assert!(!report.holds);
            assert!(!report.per_alternative[0].feasible);
        }
    }
}
