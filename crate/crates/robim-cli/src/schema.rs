//! The problem-file format: UTF-8 JSON with a fixed field set.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "states": ["downturn", "boom"],
//!   "actions": {"incumbent": [1.0, 0.0], "rival": [0.0, 1.0]},
//!   "incumbent": "incumbent",
//!   "candidate": [0.4, 0.6],
//!   "utility": {"knots": [[0.0, 0.0]], "left_slope": 1.0,
//!               "right_slope": 1.0, "concave": true},
//!   "prior": [0.5, 0.5],
//!   "cost": {"family": "entropy", "kappa": 1.0}
//! }
//! ```
//!
//! `utility`, `prior`, and `cost` are optional. Unknown fields are
//! rejected so typos surface as parse errors.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use robim::infoacq::EntropyCost;
use robim::problem::{Belief, DecisionProblem};
use robim::utility::UtilityFn;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySpec {
    pub knots: Vec<(f64, f64)>,
    pub left_slope: f64,
    pub right_slope: f64,
    pub concave: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub family: String,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: u32,
    pub states: Vec<String>,
    pub actions: BTreeMap<String, Vec<f64>>,
    pub incumbent: String,
    pub candidate: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSpec>,
}

/// A parsed and validated problem file.
pub struct LoadedProblem {
    pub problem: DecisionProblem,
    pub incumbent: String,
    pub candidate: Vec<f64>,
    pub utility: Option<UtilityFn>,
    pub prior: Option<Belief>,
    pub cost: Option<EntropyCost>,
}

impl LoadedProblem {
    /// Problem with every payoff mapped through the supplied utility (the
    /// known-lower-bound hook); identity when none was given.
    pub fn transformed_problem(&self) -> DecisionProblem {
        match &self.utility {
            Some(u) => self.problem.transform_payoffs(u),
            None => self.problem.clone(),
        }
    }

    pub fn transformed_candidate(&self) -> Vec<f64> {
        match &self.utility {
            Some(u) => self.candidate.iter().map(|&x| u.eval(x)).collect(),
            None => self.candidate.clone(),
        }
    }
}

pub fn load(path: &Path) -> Result<LoadedProblem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let raw: ProblemFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    validate(raw)
}

pub fn validate(raw: ProblemFile) -> Result<LoadedProblem, CliError> {
    if raw.schema != 1 {
        return Err(CliError::Schema(format!(
            "unsupported schema version {}",
            raw.schema
        )));
    }
    let n = raw.states.len();
    let problem =
        DecisionProblem::new(raw.states.clone(), raw.actions.clone()).map_err(CliError::Lib)?;
    if !raw.actions.contains_key(&raw.incumbent) {
        return Err(CliError::Schema(format!(
            "field `incumbent`: action `{}` is not in `actions`",
            raw.incumbent
        )));
    }
    if raw.candidate.len() != n {
        return Err(CliError::Schema(format!(
            "field `candidate`: expected {n} payoffs, got {}",
            raw.candidate.len()
        )));
    }
    if raw.candidate.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Schema(
            "field `candidate`: non-finite payoff".into(),
        ));
    }
    let utility = match &raw.utility {
        Some(spec) => Some(
            UtilityFn::new(
                spec.knots.clone(),
                spec.left_slope,
                spec.right_slope,
                spec.concave,
            )
            .map_err(|e| CliError::Schema(format!("field `utility`: {e}")))?,
        ),
        None => None,
    };
    let prior = match &raw.prior {
        Some(p) => {
            if p.len() != n {
                return Err(CliError::Schema(format!(
                    "field `prior`: expected {n} probabilities, got {}",
                    p.len()
                )));
            }
            Some(
                Belief::new(p.clone())
                    .map_err(|e| CliError::Schema(format!("field `prior`: {e}")))?,
            )
        }
        None => None,
    };
    let cost = match &raw.cost {
        Some(spec) => {
            if spec.family != "entropy" {
                return Err(CliError::Schema(format!(
                    "field `cost.family`: unknown family `{}` (supported: entropy)",
                    spec.family
                )));
            }
            Some(
                EntropyCost::new(spec.kappa)
                    .map_err(|e| CliError::Schema(format!("field `cost`: {e}")))?,
            )
        }
        None => None,
    };
    Ok(LoadedProblem {
        problem,
        incumbent: raw.incumbent,
        candidate: raw.candidate,
        utility,
        prior,
        cost,
    })
}
