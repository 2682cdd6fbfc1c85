//! Dense linear and binary programming.
//!
//! [`solve_lp`] runs a two-phase, bounded-variable tableau simplex and
//! reports primal values together with the constraint duals of the final
//! basis. [`Simplex`] exposes the same engine with warm-started column
//! addition, which the restricted master of column generation relies on.
//! [`solve_binary`] is a best-first branch-and-bound over LP relaxations.

mod binary;
mod simplex;

pub use binary::{solve_binary, BinaryProgram, BinarySolution, BinaryStatus, BranchAndBound};
pub use simplex::Simplex;

use crate::error::{validation, Result};

/// Default branch-and-bound node limit.
pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    /// Whether `lhs rel rhs` holds up to `tol`.
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Relation::Le => lhs <= rhs + tol,
            Relation::Ge => lhs >= rhs - tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `optimize c·x  s.t.  A x (<=|>=|=) b,  lower <= x <= upper`.
///
/// Lower bounds default to 0 and upper bounds to +inf. Either may be
/// infinite; free variables are split internally.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(validation("bound vectors do not match the number of variables"));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(validation("objective coefficients must be finite"));
        }
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY || lo > hi {
                return Err(validation(format!("variable {j} has invalid bounds [{lo}, {hi}]")));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(validation(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(validation(format!("constraint {i} has non-finite data")));
            }
        }
        Ok(())
    }

    /// Row activities `A x`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|row| row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum())
            .collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of rows or bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, act) in self.constraints.iter().zip(self.activities(x)) {
            let v = match row.relation {
                Relation::Le => act - row.rhs,
                Relation::Ge => row.rhs - act,
                Relation::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for ((&v, &lo), &hi) in x.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a simplex solve.
///
/// `duals[i]` is the shadow price of constraint `i`: the rate of change of
/// the reported objective per unit increase of its right-hand side. With
/// this convention a `>=` row of a minimization and a `<=` row of a
/// maximization have non-negative duals. `reduced_costs[j]` is
/// `c_j - duals · A_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Dual objective `b · y` plus the contribution of finite variable
    /// bounds that the reduced costs push against.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let mut total: f64 = lp.constraints.iter().zip(&self.duals).map(|(r, y)| r.rhs * y).sum();
        for (j, &d) in self.reduced_costs.iter().enumerate() {
            // the bound a variable sits at absorbs its reduced cost
            let bound = if (self.x[j] - lp.lower[j]).abs() <= (self.x[j] - lp.upper[j]).abs() {
                lp.lower[j]
            } else {
                lp.upper[j]
            };
            if bound.is_finite() {
                total += d * bound;
            }
        }
        total
    }
}

/// Solves `lp` from scratch.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    Simplex::new(lp)?.solve()
}
