//! Known-utility case: optimality polytopes on the belief simplex.
//!
//! With the utility fixed (risk-neutral after pre-transforming payoffs), the
//! beliefs at which an action is optimal form a polytope `P_a` cut out of
//! the probability simplex by the pairwise indifference hyperplanes. A
//! candidate improves on `a` exactly when it strictly beats every rival in
//! the states where `a` is uniquely optimal and weakly beats `a` at every
//! vertex of each indifference face with a relevant rival.
//!
//! Vertices come from exhaustive enumeration of constraint subsets; at desk
//! scale (n <= 8) that is simpler and more deterministic than incremental
//! methods.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{
    dominates, expected_value, partition, Belief, DecisionProblem, DominanceMode,
};
use crate::superiority::{FailureReason, Verdict};

/// `normal . mu <= offset` over the belief coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub label: HalfSpaceLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HalfSpaceLabel {
    /// `mu_state >= 0`, written as `-mu_state <= 0`.
    StateFloor { state: usize },
    /// `E[rival - a] <= 0`.
    Indifference { action: String },
}

/// The optimality region of an action: defining half-spaces, enumerated
/// vertices (lexicographically sorted), and the affine dimension.
#[derive(Debug, Clone, Serialize)]
pub struct BeliefPolytope {
    pub halfspaces: Vec<HalfSpace>,
    pub vertices: Vec<Belief>,
    pub dim: usize,
}

const FEAS_TOL: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-8;
const ON_FACE_TOL: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-11;
const RANK_TOL: f64 = 1e-7;

/// Gaussian elimination with partial pivoting; `None` when singular.
#[allow(clippy::needless_range_loop)]
fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let pivot_row =
            (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[pivot_row][col].abs() < PIVOT_TOL {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

/// Rank of a set of row vectors under elimination with tolerance.
#[allow(clippy::needless_range_loop)]
fn matrix_rank(mut rows: Vec<Vec<f64>>) -> usize {
    let mut rank = 0;
    let ncols = rows.first().map_or(0, Vec::len);
    let mut col = 0;
    while col < ncols && rank < rows.len() {
        let pivot = (rank..rows.len())
            .max_by(|&i, &j| rows[i][col].abs().partial_cmp(&rows[j][col].abs()).unwrap());
        match pivot {
            Some(p) if rows[p][col].abs() > RANK_TOL => {
                rows.swap(rank, p);
                for i in 0..rows.len() {
                    if i == rank {
                        continue;
                    }
                    let f = rows[i][col] / rows[rank][col];
                    for k in col..ncols {
                        rows[i][k] -= f * rows[rank][k];
                    }
                }
                rank += 1;
            }
            _ => {}
        }
        col += 1;
    }
    rank
}

/// Affine dimension of a point set: -1 for empty, 0 for a single point.
fn affine_dim(points: &[&[f64]]) -> isize {
    match points.split_first() {
        None => -1,
        Some((base, rest)) => {
            let diffs: Vec<Vec<f64>> = rest
                .iter()
                .map(|p| p.iter().zip(base.iter()).map(|(&x, &y)| x - y).collect())
                .collect();
            matrix_rank(diffs) as isize
        }
    }
}

fn combinations(pool: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(
        start: usize,
        pool: usize,
        k: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..pool {
            current.push(i);
            rec(i + 1, pool, k, current, out);
            current.pop();
        }
    }
    rec(0, pool, k, &mut current, &mut out);
    out
}

fn require_no_weak_dominance(problem: &DecisionProblem, eps: f64) -> Result<()> {
    let ids = problem.action_ids();
    for x in &ids {
        for y in &ids {
            if x == y {
                continue;
            }
            if dominates(
                problem.payoffs(y)?,
                problem.payoffs(x)?,
                DominanceMode::StrictSomewhere,
                eps,
            )? {
                return Err(Error::Assumption(format!(
                    "action `{x}` is weakly dominated by `{y}`"
                )));
            }
        }
    }
    Ok(())
}

/// Builds the optimality polytope of `a_id` by enumerating all
/// `(n-1)`-subsets of {indifference hyperplanes} + {simplex facets},
/// solving each with the normalization row, and keeping feasible solutions.
pub fn polytope_of(problem: &DecisionProblem, a_id: &str, eps: f64) -> Result<BeliefPolytope> {
    let n = problem.n_states();
    if n > 8 {
        return Err(Error::TooLarge(format!(
            "vertex enumeration is limited to 8 states, got {n}"
        )));
    }
    require_no_weak_dominance(problem, eps)?;
    let a = problem.payoffs(a_id)?.to_vec();
    let rivals = problem.rivals(a_id);
    if rivals.is_empty() {
        return Err(Error::Domain(format!(
            "action `{a_id}` has no alternatives"
        )));
    }

    let mut halfspaces = Vec::new();
    // equality generators for vertex enumeration, same order as halfspaces
    let mut generators: Vec<Vec<f64>> = Vec::new();
    for (id, b) in &rivals {
        let normal: Vec<f64> = b.iter().zip(&a).map(|(&x, &y)| x - y).collect();
        halfspaces.push(HalfSpace {
            normal: normal.clone(),
            offset: 0.0,
            label: HalfSpaceLabel::Indifference {
                action: id.to_string(),
            },
        });
        generators.push(normal);
    }
    for state in 0..n {
        let mut normal = vec![0.0; n];
        normal[state] = -1.0;
        halfspaces.push(HalfSpace {
            normal: normal.clone(),
            offset: 0.0,
            label: HalfSpaceLabel::StateFloor { state },
        });
        generators.push(normal);
    }

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for combo in combinations(generators.len(), n - 1) {
        let mut m: Vec<Vec<f64>> = combo.iter().map(|&i| generators[i].clone()).collect();
        m.push(vec![1.0; n]);
        let mut rhs = vec![0.0; n - 1];
        rhs.push(1.0);
        let Some(mu) = solve_square(m, rhs) else {
            continue;
        };
        if mu.iter().any(|&x| !(x >= -FEAS_TOL)) {
            continue;
        }
        let feasible = rivals.iter().all(|(_, b)| {
            b.iter()
                .zip(&a)
                .zip(&mu)
                .map(|((&x, &y), &p)| (x - y) * p)
                .sum::<f64>()
                <= FEAS_TOL
        });
        if !feasible {
            continue;
        }
        if !vertices
            .iter()
            .any(|v| v.iter().zip(&mu).all(|(&x, &y)| (x - y).abs() <= DEDUP_TOL))
        {
            vertices.push(mu);
        }
    }

    let dim = affine_dim(&vertices.iter().map(Vec::as_slice).collect::<Vec<_>>());
    if dim < n as isize - 1 {
        return Err(Error::Degenerate(format!(
            "optimality region of `{a_id}` has affine dimension {dim}, expected {}",
            n - 1
        )));
    }
    vertices.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let vertices = vertices
        .into_iter()
        .map(|mut v| {
            for p in v.iter_mut() {
                if *p < 0.0 {
                    *p = 0.0;
                }
            }
            let sum: f64 = v.iter().sum();
            for p in v.iter_mut() {
                *p /= sum;
            }
            Belief::new(v)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BeliefPolytope {
        halfspaces,
        vertices,
        dim: dim as usize,
    })
}

/// Vertices of the polytope lying on the indifference hyperplane with `b`.
fn face_vertices<'p>(polytope: &'p BeliefPolytope, a: &[f64], b: &[f64]) -> Vec<&'p Belief> {
    polytope
        .vertices
        .iter()
        .filter(|v| {
            let gap: f64 = b
                .iter()
                .zip(a)
                .zip(v.probs())
                .map(|((&x, &y), &p)| (x - y) * p)
                .sum();
            gap.abs() <= ON_FACE_TOL
        })
        .collect()
}

/// Rivals whose indifference face with `a_id` is a facet of the polytope
/// (affine dimension `n - 2`).
pub fn a_relevant(
    problem: &DecisionProblem,
    a_id: &str,
    polytope: &BeliefPolytope,
    _eps: f64,
) -> Result<Vec<String>> {
    let n = problem.n_states();
    let a = problem.payoffs(a_id)?;
    let mut out = Vec::new();
    for (id, b) in problem.rivals(a_id) {
        let verts = face_vertices(polytope, a, b);
        let pts: Vec<&[f64]> = verts.iter().map(|v| v.probs()).collect();
        if affine_dim(&pts) == n as isize - 2 {
            out.push(id.to_string());
        }
    }
    Ok(out)
}

/// Known-utility improvement check: strict improvement over the rival
/// maximum wherever `a_id` is uniquely optimal, and no loss against `a_id`
/// at any vertex of a relevant indifference face.
pub fn check_u_improves(
    problem: &DecisionProblem,
    a_id: &str,
    ahat: &[f64],
    eps: f64,
) -> Result<Verdict> {
    let a = problem.payoffs(a_id)?.to_vec();
    if ahat.len() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: ahat.len(),
        });
    }
    let polytope = polytope_of(problem, a_id, eps)?;
    let max_b = problem.rival_max(a_id)?;
    let part = partition(&a, &max_b, eps)?;
    for &t in &part.a_states {
        if !(ahat[t] > max_b[t] + eps) {
            return Ok(Verdict::fails(FailureReason::GainStateNotImproved {
                state: t,
            }));
        }
    }
    for id in a_relevant(problem, a_id, &polytope, eps)? {
        let b = problem.payoffs(&id)?;
        for v in face_vertices(&polytope, &a, b) {
            let ev_ahat = expected_value(ahat, v)?;
            let ev_a = expected_value(&a, v)?;
            if ev_ahat < ev_a - eps {
                return Ok(Verdict::fails(FailureReason::RotationFails {
                    versus: id.clone(),
                    vertex: v.probs().to_vec(),
                    shortfall: ev_a - ev_ahat,
                }));
            }
        }
    }
    Ok(Verdict::Holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::DEFAULT_EPS;
    use crate::simplex::{minimize, LpOutcome};
    use std::collections::BTreeMap;

    fn problem(actions: &[(&str, Vec<f64>)], n: usize) -> DecisionProblem {
        let states = (0..n).map(|i| format!("s{i}")).collect();
        let map: BTreeMap<String, Vec<f64>> = actions
            .iter()
            .map(|(id, p)| (id.to_string(), p.clone()))
            .collect();
        DecisionProblem::new(states, map).unwrap()
    }

    fn two_action() -> DecisionProblem {
        problem(&[("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])], 2)
    }

    #[test]
    fn two_state_polytope_vertices() {
        let poly = polytope_of(&two_action(), "a", DEFAULT_EPS).unwrap();
        assert_eq!(poly.dim, 1);
        assert_eq!(poly.vertices.len(), 2);
        let v: Vec<&[f64]> = poly.vertices.iter().map(|b| b.probs()).collect();
        assert!((v[0][0] - 0.5).abs() < 1e-9 && (v[0][1] - 0.5).abs() < 1e-9);
        assert!((v[1][0] - 1.0).abs() < 1e-9 && v[1][1].abs() < 1e-9);
    }

    #[test]
    fn non_binding_rival_leaves_vertices_unchanged() {
        let p = problem(
            &[
                ("a", vec![1.0, 0.0]),
                ("b", vec![0.0, 1.0]),
                ("c", vec![0.2, 0.2]),
            ],
            2,
        );
        let poly = polytope_of(&p, "a", DEFAULT_EPS).unwrap();
        assert_eq!(poly.vertices.len(), 2);
        let rel = a_relevant(&p, "a", &poly, DEFAULT_EPS).unwrap();
        assert_eq!(rel, vec!["b".to_string()]);
    }

    #[test]
    fn weakly_dominated_action_rejected() {
        let p = problem(
            &[
                ("a", vec![1.0, 0.0]),
                ("b", vec![0.0, 1.0]),
                ("b2", vec![-0.5, 0.5]),
            ],
            2,
        );
        let err = polytope_of(&p, "a", DEFAULT_EPS).unwrap_err();
        assert!(matches!(err, Error::Assumption(_)));
    }

    #[test]
    fn degenerate_region_detected() {
        // a is optimal only at the single belief mu = (1/2, 1/2)
        let p = problem(
            &[
                ("a", vec![0.5, 0.5]),
                ("b", vec![1.0, 0.0]),
                ("c", vec![0.0, 1.0]),
            ],
            2,
        );
        let err = polytope_of(&p, "a", DEFAULT_EPS).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn rotation_check_two_states() {
        let p = two_action();
        assert!(check_u_improves(&p, "a", &[0.4, 0.6], DEFAULT_EPS)
            .unwrap()
            .holds());
        let v = check_u_improves(&p, "a", &[0.4, 0.55], DEFAULT_EPS).unwrap();
        assert!(matches!(
            v,
            Verdict::Fails {
                reason: FailureReason::RotationFails { .. }
            }
        ));
        assert!(check_u_improves(&p, "a", &[1.0, 0.0], DEFAULT_EPS)
            .unwrap()
            .holds());
    }

    #[test]
    fn quadratic_loss_relevant_actions() {
        let p = problem(
            &[
                ("0", vec![0.0, -0.25, -1.0]),
                ("0.5", vec![-0.25, 0.0, -0.25]),
                ("1", vec![-1.0, -0.25, 0.0]),
            ],
            3,
        );
        let poly = polytope_of(&p, "0.5", DEFAULT_EPS).unwrap();
        let rel = a_relevant(&p, "0.5", &poly, DEFAULT_EPS).unwrap();
        assert_eq!(rel, vec!["0".to_string(), "1".to_string()]);
    }

    #[test]
    fn vertices_match_lp_probing() {
        // a fixed three-state instance cross-checked against LP probes
        let p = problem(
            &[
                ("a", vec![0.9, -0.1, 0.2]),
                ("b", vec![-0.3, 0.8, 0.1]),
                ("c", vec![0.1, 0.2, 0.7]),
            ],
            3,
        );
        let poly = polytope_of(&p, "a", DEFAULT_EPS).unwrap();
        let a = p.payoffs("a").unwrap();
        let mut a_ub = Vec::new();
        for (_, b) in p.rivals("a") {
            a_ub.push(b.iter().zip(a).map(|(&x, &y)| x - y).collect::<Vec<f64>>());
        }
        let b_ub = vec![0.0; a_ub.len()];
        let a_eq = vec![vec![1.0; 3]];
        let b_eq = vec![1.0];

        // probe objectives: coordinate directions, differences, and a few
        // fixed skewed directions
        let mut objectives = Vec::new();
        for i in 0..3 {
            let mut o = vec![0.0; 3];
            o[i] = 1.0;
            objectives.push(o.clone());
            o[i] = -1.0;
            objectives.push(o);
        }
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let mut o = vec![0.0; 3];
                    o[i] = 1.0;
                    o[j] = -1.0;
                    objectives.push(o);
                }
            }
        }
        objectives.push(vec![0.3, -0.9, 0.1]);
        objectives.push(vec![-0.7, 0.2, 0.5]);
        objectives.push(vec![0.05, 0.6, -0.8]);

        let mut probed: Vec<Vec<f64>> = Vec::new();
        for obj in &objectives {
            if let LpOutcome::Optimal { x, .. } = minimize(obj, &a_ub, &b_ub, &a_eq, &b_eq).unwrap()
            {
                if !probed
                    .iter()
                    .any(|v| v.iter().zip(&x).all(|(&p, &q)| (p - q).abs() <= 1e-7))
                {
                    probed.push(x);
                }
            }
        }
        // every probed optimum is an enumerated vertex
        for v in &probed {
            assert!(
                poly.vertices.iter().any(|w| w
                    .probs()
                    .iter()
                    .zip(v)
                    .all(|(&p, &q)| (p - q).abs() <= 1e-6)),
                "LP probe found a vertex the enumeration missed: {v:?}"
            );
        }
        // and the probes recover every enumerated vertex of this instance
        for w in &poly.vertices {
            assert!(
                probed.iter().any(|v| w
                    .probs()
                    .iter()
                    .zip(v)
                    .all(|(&p, &q)| (p - q).abs() <= 1e-6)),
                "enumerated vertex {w:?} not reproduced by LP probing"
            );
        }
    }

    #[test]
    fn face_vertex_union_strict_when_uniquely_optimal_somewhere() {
        let p = two_action();
        let poly = polytope_of(&p, "a", DEFAULT_EPS).unwrap();
        let a = p.payoffs("a").unwrap();
        let b = p.payoffs("b").unwrap();
        let face: Vec<_> = face_vertices(&poly, a, b);
        assert_eq!(face.len(), 1);
        assert_eq!(poly.vertices.len(), 2);
    }

    #[test]
    fn face_vertex_union_exhausts_vertices_without_unique_states() {
        // a is never uniquely optimal; every vertex lies on a relevant face
        let p = problem(
            &[
                ("a", vec![0.6, 0.5]),
                ("b", vec![1.0, 0.0]),
                ("c", vec![0.0, 1.0]),
            ],
            2,
        );
        let poly = polytope_of(&p, "a", DEFAULT_EPS).unwrap();
        let a = p.payoffs("a").unwrap();
        let mut on_faces = 0;
        for id in ["b", "c"] {
            on_faces += face_vertices(&poly, a, p.payoffs(id).unwrap()).len();
        }
        assert_eq!(poly.vertices.len(), 2);
        assert_eq!(on_faces, 2);
    }
}
