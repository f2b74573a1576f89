//! Dense two-phase simplex for the small linear programs behind the lottery
//! feasibility check and the polytope cross-checks.
//!
//! Bland's rule picks both the entering and the leaving variable, so the
//! solver cannot cycle and is fully deterministic. All variables are
//! nonnegative; the problems this crate builds are a few dozen rows at most.

use serde::Serialize;

use crate::error::{Error, Result};

/// Feasibility slack: a system counts as satisfied within this tolerance.
pub const TOL: f64 = 1e-9;

const MAX_ITERS: usize = 50_000;

/// Outcome of a pure feasibility question for `A x <= c, x >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Feasibility {
    Feasible(Vec<f64>),
    /// Carries the phase-1 optimum (total infeasibility); values barely
    /// above [`TOL`] indicate a borderline verdict.
    Infeasible {
        residual: f64,
    },
}

/// Outcome of a minimization.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible { residual: f64 },
    Unbounded,
}

enum RunOutcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
    first_artificial: usize,
}

impl Tableau {
    fn build(
        n: usize,
        a_ub: &[Vec<f64>],
        b_ub: &[f64],
        a_eq: &[Vec<f64>],
        b_eq: &[f64],
    ) -> Result<Self> {
        if a_ub.len() != b_ub.len() || a_eq.len() != b_eq.len() {
            return Err(Error::DimensionMismatch {
                expected: b_ub.len(),
                got: a_ub.len(),
            });
        }
        let m_ub = a_ub.len();
        let m = m_ub + a_eq.len();
        if n + m > 4096 {
            return Err(Error::TooLarge(format!(
                "{n} variables and {m} constraints exceed the desk-scale limit"
            )));
        }
        let n_structural = n + m_ub;
        let ncols = n_structural + m;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        for (i, (coeffs, &b)) in a_ub
            .iter()
            .zip(b_ub)
            .chain(a_eq.iter().zip(b_eq))
            .enumerate()
        {
            if coeffs.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: coeffs.len(),
                });
            }
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; ncols];
            for (j, &a) in coeffs.iter().enumerate() {
                row[j] = sign * a;
            }
            if i < m_ub {
                row[n + i] = sign;
            }
            row[n_structural + i] = 1.0;
            rows.push(row);
            rhs.push(sign * b);
            basis.push(n_structural + i);
        }
        Ok(Self {
            rows,
            rhs,
            basis,
            ncols,
            first_artificial: n_structural,
        })
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        self.rhs[row] /= p;
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let f = self.rows[i][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..self.ncols {
                self.rows[i][j] -= f * self.rows[row][j];
            }
            self.rhs[i] -= f * self.rhs[row];
        }
        self.basis[row] = col;
    }

    fn run(&mut self, cost: &[f64], allowed: &[bool]) -> Result<RunOutcome> {
        for _ in 0..MAX_ITERS {
            let mut entering = None;
            'cols: for j in 0..self.ncols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut r = cost[j];
                for (i, &bi) in self.basis.iter().enumerate() {
                    r -= cost[bi] * self.rows[i][j];
                }
                if r < -TOL {
                    entering = Some(j);
                    break 'cols;
                }
            }
            let Some(j) = entering else {
                return Ok(RunOutcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][j];
                if a > TOL {
                    let ratio = self.rhs[i] / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - TOL
                                || ((ratio - lr).abs() <= TOL && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((i, _)) = leave else {
                return Ok(RunOutcome::Unbounded);
            };
            self.pivot(i, j);
        }
        Err(Error::Numerical("simplex iteration limit reached".into()))
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.rhs)
            .map(|(&b, &v)| cost[b] * v)
            .sum()
    }

    /// Phase 1: minimize the artificial sum; afterwards pivot leftover
    /// artificials out of the basis and drop redundant rows.
    fn phase1(&mut self) -> Result<Option<f64>> {
        let mut cost = vec![0.0; self.ncols];
        for c in cost[self.first_artificial..].iter_mut() {
            *c = 1.0;
        }
        let allowed = vec![true; self.ncols];
        match self.run(&cost, &allowed)? {
            RunOutcome::Unbounded => {
                return Err(Error::Numerical("phase-1 problem unbounded".into()))
            }
            RunOutcome::Optimal => {}
        }
        let residual = self.objective(&cost);
        if residual > TOL {
            return Ok(Some(residual));
        }
        let mut drop_rows = Vec::new();
        for i in 0..self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&j| self.rows[i][j].abs() > TOL);
                match col {
                    Some(j) => self.pivot(i, j),
                    None => drop_rows.push(i),
                }
            }
        }
        for &i in drop_rows.iter().rev() {
            self.rows.remove(i);
            self.rhs.remove(i);
            self.basis.remove(i);
        }
        Ok(None)
    }

    fn extract(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs[i];
            }
        }
        x
    }
}

/// Is `A x <= c` solvable with `x >= 0`? Returns a feasible point or a
/// certificate residual.
pub fn lp_feasible(a_ub: &[Vec<f64>], c: &[f64]) -> Result<Feasibility> {
    let n = a_ub.first().map_or(0, Vec::len);
    if n == 0 {
        // no variables or no constraints: the origin works if every bound allows it
        if c.iter().all(|&b| b >= -TOL) {
            return Ok(Feasibility::Feasible(Vec::new()));
        }
        return Ok(Feasibility::Infeasible {
            residual: c.iter().filter(|&&b| b < -TOL).map(|&b| -b).sum(),
        });
    }
    let mut t = Tableau::build(n, a_ub, c, &[], &[])?;
    match t.phase1()? {
        Some(residual) => Ok(Feasibility::Infeasible { residual }),
        None => Ok(Feasibility::Feasible(t.extract(n))),
    }
}

/// Minimize `obj . x` subject to `A_ub x <= b_ub`, `A_eq x = b_eq`, `x >= 0`.
pub fn minimize(
    obj: &[f64],
    a_ub: &[Vec<f64>],
    b_ub: &[f64],
    a_eq: &[Vec<f64>],
    b_eq: &[f64],
) -> Result<LpOutcome> {
    let n = obj.len();
    let mut t = Tableau::build(n, a_ub, b_ub, a_eq, b_eq)?;
    if let Some(residual) = t.phase1()? {
        return Ok(LpOutcome::Infeasible { residual });
    }
    let mut cost = vec![0.0; t.ncols];
    cost[..n].copy_from_slice(obj);
    let mut allowed = vec![true; t.ncols];
    for a in allowed[t.first_artificial..].iter_mut() {
        *a = false;
    }
    match t.run(&cost, &allowed)? {
        RunOutcome::Unbounded => Ok(LpOutcome::Unbounded),
        RunOutcome::Optimal => {
            let x = t.extract(n);
            let value = obj.iter().zip(&x).map(|(&c, &v)| c * v).sum();
            Ok(LpOutcome::Optimal { x, value })
        }
    }
}
