//! Line data for the two-state picture: expected payoff of each action as a
//! function of the belief, plus the two indifference-belief markers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::superiority::two_point_indifference;
use crate::utility::UtilityFn;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PlotRow {
    pub mu: f64,
    pub eu_a: f64,
    pub eu_ahat: f64,
    pub eu_b: f64,
}

/// Sampled expected-utility lines over the belief in state 1, with the
/// indifference markers `mu_bar` (incumbent vs alternative) and `mu_hat`
/// (candidate vs alternative).
#[derive(Debug, Clone, Serialize)]
pub struct PlotData {
    pub rows: Vec<PlotRow>,
    pub mu_bar: f64,
    pub mu_hat: f64,
}

/// Builds the figure data on a `points`-row grid over `mu` in `[0,1]`.
/// Two states only; pass a utility to draw the lines in utils rather than
/// money.
pub fn figure_data(
    a: &[f64],
    b: &[f64],
    ahat: &[f64],
    u: Option<&UtilityFn>,
    points: usize,
) -> Result<PlotData> {
    if a.len() != 2 || b.len() != 2 || ahat.len() != 2 {
        return Err(Error::Domain("figure data needs exactly two states".into()));
    }
    if points < 2 {
        return Err(Error::Domain("need at least two grid points".into()));
    }
    let identity = UtilityFn::identity();
    let u = u.unwrap_or(&identity);
    let line = |x: &[f64], mu: f64| (1.0 - mu) * u.eval(x[0]) + mu * u.eval(x[1]);
    let rows = (0..points)
        .map(|i| {
            let mu = i as f64 / (points - 1) as f64;
            PlotRow {
                mu,
                eu_a: line(a, mu),
                eu_ahat: line(ahat, mu),
                eu_b: line(b, mu),
            }
        })
        .collect();
    let mu_bar = two_point_indifference(a, b, u, 0, 1)?;
    let mu_hat = two_point_indifference(ahat, b, u, 0, 1)?;
    Ok(PlotData {
        rows,
        mu_bar,
        mu_hat,
    })
}
