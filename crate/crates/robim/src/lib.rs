//! Robust improvements of actions in finite decision problems.
//!
//! Given two actions with state-dependent monetary payoffs, when does
//! swapping the first for a candidate make it more attractive against the
//! second for *every* agent in a utility class, whatever their belief? This
//! crate decides those questions with machine-checkable certificates and
//! constructs falsifying witnesses when they fail:
//!
//! * [`superiority`] — the pairwise checks over concave (b-superior) and
//!   monotone (b-better) utilities, with kinked-utility witnesses;
//! * [`multi`] — the same question against a set of alternatives, under
//!   richness and single-peakedness;
//! * [`lottery`] — the known-belief case via stochastic dominance and
//!   convex-weight LP feasibility;
//! * [`knownutil`] — the known-utility case via optimality polytopes on the
//!   belief simplex;
//! * [`infoacq`] — endogenous information acquisition: the two-state
//!   posterior-separable learning problem and the selected-more check;
//! * [`oracle`] — seeded Monte Carlo falsifiers and independent oracles the
//!   test suite cross-checks everything against;
//! * [`plot`] — line data for the two-state geometry.
//!
//! The book under `book/` walks through the concepts; its code snippets
//! compile and run as doctests of this crate.

// Validation sites use `!(x > bound)` so NaN inputs fall to the rejecting
// branch; the positive forms would silently accept them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod infoacq;
pub mod knownutil;
pub mod lottery;
pub mod multi;
pub mod oracle;
pub mod plot;
pub mod problem;
pub mod simplex;
pub mod superiority;
pub mod utility;

pub use error::{Error, Result};
pub use problem::{
    dominates, expected_utility, expected_value, mixture, partition, Belief, DecisionProblem,
    DominanceMode, StatePartition, DEFAULT_EPS,
};
pub use superiority::{
    check_b_better, check_b_superior, lambda_interval, two_point_indifference,
    witness_not_b_better, witness_not_b_superior, FailureReason, LambdaInterval, Verdict,
    ViolatedClaim, Witness,
};
pub use utility::UtilityFn;

use serde::Serialize;

/// The utility class a robustness question quantifies over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UtilityClass {
    /// Strictly increasing and continuous.
    Monotone,
    /// Strictly increasing, weakly concave, and continuous.
    RiskAverse,
}

/// The book chapters double as doctests so the guide can never drift from
/// the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/decision-problems.md")]
    mod decision_problems {}
    #[doc = include_str!("../../../book/src/robust-improvements.md")]
    mod robust_improvements {}
    #[doc = include_str!("../../../book/src/many-alternatives.md")]
    mod many_alternatives {}
    #[doc = include_str!("../../../book/src/lotteries.md")]
    mod lotteries {}
    #[doc = include_str!("../../../book/src/known-utilities.md")]
    mod known_utilities {}
    #[doc = include_str!("../../../book/src/information-acquisition.md")]
    mod information_acquisition {}
    #[doc = include_str!("../../../book/src/oracles-and-testing.md")]
    mod oracles_and_testing {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
