//! Piecewise-linear, strictly increasing utility functions of money.
//!
//! Piecewise-linear functions are closed under the kink constructions used
//! by the falsifying witnesses, and they evaluate exactly at their knots, so
//! a smooth utility sampled at every payoff value gives exact expected
//! utilities wherever it matters.

use serde::Serialize;

use crate::error::{Error, Result};

/// Slack used when validating that a concave-flagged function has a
/// nonincreasing slope sequence; absorbs rounding in sampled constructions.
const SLOPE_SLACK: f64 = 1e-12;

/// A continuous piecewise-linear function through `knots`, extrapolating
/// with `left_slope` below the first knot and `right_slope` above the last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityFn {
    knots: Vec<(f64, f64)>,
    left_slope: f64,
    right_slope: f64,
    concave: bool,
}

impl UtilityFn {
    /// Validates strict monotonicity (all slopes positive) and, when the
    /// `concave` flag is set, that slopes are nonincreasing left to right
    /// including the extrapolation slopes.
    pub fn new(
        knots: Vec<(f64, f64)>,
        left_slope: f64,
        right_slope: f64,
        concave: bool,
    ) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Invalid {
                what: "utility",
                detail: "need at least one knot".into(),
            });
        }
        if knots.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Invalid {
                what: "utility",
                detail: "knots must be finite".into(),
            });
        }
        if !(left_slope > 0.0) || !(right_slope > 0.0) {
            return Err(Error::Invalid {
                what: "utility",
                detail: format!(
                    "extrapolation slopes must be positive, got {left_slope} and {right_slope}"
                ),
            });
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Invalid {
                    what: "utility",
                    detail: format!("knot xs must be strictly increasing near {}", w[0].0),
                });
            }
            if w[1].1 <= w[0].1 {
                return Err(Error::Invalid {
                    what: "utility",
                    detail: format!("knot ys must be strictly increasing near {}", w[0].1),
                });
            }
        }
        let u = Self {
            knots,
            left_slope,
            right_slope,
            concave,
        };
        if concave {
            let slopes = u.segment_slopes();
            for w in slopes.windows(2) {
                if w[1] > w[0] + SLOPE_SLACK {
                    return Err(Error::Invalid {
                        what: "utility",
                        detail: format!(
                            "concave flag set but slopes increase: {} -> {}",
                            w[0], w[1]
                        ),
                    });
                }
            }
        }
        Ok(u)
    }

    /// `u(x) = x`.
    pub fn identity() -> Self {
        Self {
            knots: vec![(0.0, 0.0)],
            left_slope: 1.0,
            right_slope: 1.0,
            concave: true,
        }
    }

    /// Concave kink: identity below `kink`, slope `iota` in (0,1) above.
    pub fn kinked_above(kink: f64, iota: f64) -> Result<Self> {
        if !(0.0 < iota && iota < 1.0) {
            return Err(Error::Domain(format!("iota {iota} outside (0,1)")));
        }
        Self::new(vec![(kink, kink)], 1.0, iota, true)
    }

    /// Convex kink: slope `iota` in (0,1) below `kink`, identity above.
    /// Monotone but deliberately not concave-flagged.
    pub fn kinked_below(kink: f64, iota: f64) -> Result<Self> {
        if !(0.0 < iota && iota < 1.0) {
            return Err(Error::Domain(format!("iota {iota} outside (0,1)")));
        }
        Self::new(vec![(kink, kink)], iota, 1.0, false)
    }

    /// Samples `f` at the given x grid and interpolates linearly. The
    /// concave flag is set automatically when the sampled slopes are
    /// nonincreasing. Evaluation is exact at every grid point.
    pub fn from_samples(f: impl Fn(f64) -> f64, xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::Invalid {
                what: "utility",
                detail: "need at least two sample points".into(),
            });
        }
        let mut xs = xs.to_vec();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        let knots: Vec<(f64, f64)> = xs.iter().map(|&x| (x, f(x))).collect();
        let first = (knots[1].1 - knots[0].1) / (knots[1].0 - knots[0].0);
        let m = knots.len();
        let last = (knots[m - 1].1 - knots[m - 2].1) / (knots[m - 1].0 - knots[m - 2].0);
        let probe = Self::new(knots.clone(), first, last, false)?;
        let slopes = probe.segment_slopes();
        let concave = slopes.windows(2).all(|w| w[1] <= w[0] + SLOPE_SLACK);
        Self::new(knots, first, last, concave)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (x0, y0) = self.knots[0];
        if x <= x0 {
            return y0 + self.left_slope * (x - x0);
        }
        let (xm, ym) = *self.knots.last().unwrap();
        if x >= xm {
            return ym + self.right_slope * (x - xm);
        }
        // first knot with knot.x >= x; x is strictly inside (x0, xm) here
        let hi = self.knots.partition_point(|&(kx, _)| kx < x);
        let (xa, ya) = self.knots[hi - 1];
        let (xb, yb) = self.knots[hi];
        ya + (yb - ya) * (x - xa) / (xb - xa)
    }

    /// All slopes left to right: left extrapolation, each segment, right
    /// extrapolation.
    pub fn segment_slopes(&self) -> Vec<f64> {
        let mut slopes = Vec::with_capacity(self.knots.len() + 1);
        slopes.push(self.left_slope);
        for w in self.knots.windows(2) {
            slopes.push((w[1].1 - w[0].1) / (w[1].0 - w[0].0));
        }
        slopes.push(self.right_slope);
        slopes
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Whether the function passed concavity validation at construction.
    pub fn is_concave(&self) -> bool {
        self.concave
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_evaluates() {
        let u = UtilityFn::identity();
        for x in [-3.0, 0.0, 0.5, 7.25] {
            assert_eq!(u.eval(x), x);
        }
        assert!(u.is_concave());
    }

    #[test]
    fn kink_above_values() {
        let u = UtilityFn::kinked_above(0.0, 0.1).unwrap();
        assert_eq!(u.eval(-0.5), -0.5);
        assert_eq!(u.eval(0.0), 0.0);
        assert!((u.eval(1.0) - 0.1).abs() < 1e-15);
        assert!((u.eval(1.5) - 0.15).abs() < 1e-15);
        assert!(u.is_concave());
    }

    #[test]
    fn kink_below_is_monotone_not_concave() {
        let u = UtilityFn::kinked_below(0.4, 0.5).unwrap();
        assert!((u.eval(0.0) - 0.2).abs() < 1e-15);
        assert_eq!(u.eval(0.4), 0.4);
        assert_eq!(u.eval(0.6), 0.6);
        assert!(!u.is_concave());
        // the same shape with the concave flag must be rejected
        assert!(UtilityFn::new(vec![(0.4, 0.4)], 0.5, 1.0, true).is_err());
    }

    #[test]
    fn interior_interpolation() {
        let u = UtilityFn::new(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)], 3.0, 0.5, true).unwrap();
        assert!((u.eval(0.5) - 1.0).abs() < 1e-15);
        assert!((u.eval(1.5) - 2.5).abs() < 1e-15);
        assert!((u.eval(-1.0) + 3.0).abs() < 1e-15);
        assert!((u.eval(3.0) - 3.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_monotone() {
        assert!(UtilityFn::new(vec![(0.0, 0.0), (1.0, -1.0)], 1.0, 1.0, false).is_err());
        assert!(UtilityFn::new(vec![(0.0, 0.0)], -1.0, 1.0, false).is_err());
    }

    #[test]
    fn sampled_sqrt_is_concave() {
        let xs: Vec<f64> = (0..=20).map(|i| -0.9 + 0.2 * i as f64).collect();
        let u = UtilityFn::from_samples(|x| (1.0 + x).sqrt() - 3.0, &xs).unwrap();
        assert!(u.is_concave());
        assert!((u.eval(1.1) - ((2.1_f64).sqrt() - 3.0)).abs() < 1e-12);
    }
}
