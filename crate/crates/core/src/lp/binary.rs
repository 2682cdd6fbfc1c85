use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{solve_lp, Constraint, LinearProgram, LpStatus, Relation, Sense, DEFAULT_NODE_LIMIT};
use crate::error::{validation, Result};

const INTEGRALITY_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const PRUNE_TOL: f64 = 1e-9;

/// A linear program whose variables all take values in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl BinaryProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        BinaryProgram { sense, objective, constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn objective_value(&self, assignment: &[bool]) -> f64 {
        self.objective
            .iter()
            .zip(assignment)
            .filter(|(_, &on)| on)
            .map(|(c, _)| c)
            .sum()
    }

    pub fn is_feasible(&self, assignment: &[bool]) -> bool {
        self.constraints.iter().all(|row| {
            let lhs: f64 = row
                .coeffs
                .iter()
                .zip(assignment)
                .filter(|(_, &on)| on)
                .map(|(a, _)| a)
                .sum();
            row.relation.holds(lhs, row.rhs, FEAS_TOL)
        })
    }

    fn relaxation(&self, fixed: &[Option<bool>]) -> LinearProgram {
        let mut lp = LinearProgram::new(self.sense, self.objective.clone());
        lp.constraints = self.constraints.clone();
        for (j, f) in fixed.iter().enumerate() {
            let (lo, hi) = match f {
                Some(true) => (1.0, 1.0),
                Some(false) => (0.0, 0.0),
                None => (0.0, 1.0),
            };
            lp.set_bounds(j, lo, hi);
        }
        lp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryStatus {
    Optimal,
    Infeasible,
    /// The node limit was reached; `assignment` holds the incumbent, if any.
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub status: BinaryStatus,
    pub assignment: Option<Vec<bool>>,
    /// Objective of `assignment`, recomputed from the assignment itself.
    pub objective: Option<f64>,
    /// Best proven bound on the optimum (in the program's own sense).
    pub bound: f64,
    pub nodes: usize,
}

/// Branch-and-bound configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchAndBound {
    pub node_limit: usize,
    /// Optional feasible starting assignment used for pruning.
    pub incumbent: Option<Vec<bool>>,
}

impl Default for BranchAndBound {
    fn default() -> Self {
        BranchAndBound { node_limit: DEFAULT_NODE_LIMIT, incumbent: None }
    }
}

struct Node {
    // bound in internal minimization form
    bound: f64,
    seq: usize,
    fixed: Vec<Option<bool>>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap pops the greatest: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Solves `bp` by best-first branch-and-bound with LP relaxation bounds,
/// branching on the most fractional variable (lowest index on ties).
pub fn solve_binary(bp: &BinaryProgram, node_limit: usize) -> Result<BinarySolution> {
    BranchAndBound { node_limit, incumbent: None }.solve(bp)
}

impl BranchAndBound {
    pub fn solve(&self, bp: &BinaryProgram) -> Result<BinarySolution> {
        let n = bp.num_vars();
        if bp.objective.iter().any(|c| !c.is_finite()) {
            return Err(validation("binary program objective must be finite"));
        }
        for (i, row) in bp.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(validation(format!("binary constraint {i} has the wrong width")));
            }
        }
        if self.node_limit == 0 {
            return Err(validation("node limit must be positive"));
        }
        let sign = match bp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };

        let mut best: Option<(Vec<bool>, f64)> = None;
        if let Some(start) = &self.incumbent {
            if start.len() != n || !bp.is_feasible(start) {
                return Err(validation("supplied incumbent is not a feasible assignment"));
            }
            best = Some((start.clone(), sign * bp.objective_value(start)));
        }

        let mut heap = BinaryHeap::new();
        let mut seq = 0usize;
        let mut nodes = 0usize;

        let mut evaluate = |fixed: Vec<Option<bool>>,
                            heap: &mut BinaryHeap<Node>,
                            best: &mut Option<(Vec<bool>, f64)>,
                            nodes: &mut usize|
         -> Result<()> {
            *nodes += 1;
            let sol = solve_lp(&bp.relaxation(&fixed))?;
            if sol.status != LpStatus::Optimal {
                // relaxation of a binary program is bounded, so this is infeasibility
                return Ok(());
            }
            let bound = sign * sol.objective;
            if best.as_ref().is_some_and(|(_, inc)| bound >= inc - PRUNE_TOL) {
                return Ok(());
            }
            let integral = sol
                .x
                .iter()
                .all(|v| v.min(1.0 - v).abs() <= INTEGRALITY_TOL);
            if integral {
                let assignment: Vec<bool> = sol.x.iter().map(|v| *v > 0.5).collect();
                if bp.is_feasible(&assignment) {
                    let value = sign * bp.objective_value(&assignment);
                    if best.as_ref().is_none_or(|(_, inc)| value < *inc) {
                        *best = Some((assignment, value));
                    }
                    return Ok(());
                }
            }
            seq += 1;
            heap.push(Node { bound, seq, fixed, x: sol.x });
            Ok(())
        };

        evaluate(vec![None; n], &mut heap, &mut best, &mut nodes)?;
        let mut hit_limit = false;
        while let Some(node) = heap.pop() {
            if best.as_ref().is_some_and(|(_, inc)| node.bound >= inc - PRUNE_TOL) {
                continue;
            }
            if nodes + 2 > self.node_limit {
                heap.push(node);
                hit_limit = true;
                break;
            }
            let var = most_fractional(&node.x, &node.fixed);
            let Some(var) = var else {
                // integral relaxation that failed the exact feasibility check;
                // nothing left to branch on
                continue;
            };
            for value in [true, false] {
                let mut fixed = node.fixed.clone();
                fixed[var] = Some(value);
                evaluate(fixed, &mut heap, &mut best, &mut nodes)?;
            }
        }

        let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        let (status, bound) = if hit_limit {
            let inc = best.as_ref().map_or(f64::INFINITY, |(_, v)| *v);
            (BinaryStatus::NodeLimit, open_bound.min(inc))
        } else if let Some((_, v)) = &best {
            (BinaryStatus::Optimal, *v)
        } else {
            (BinaryStatus::Infeasible, f64::INFINITY)
        };
        let (assignment, objective) = match best {
            Some((a, _)) => {
                let obj = bp.objective_value(&a);
                (Some(a), Some(obj))
            }
            None => (None, None),
        };
        Ok(BinarySolution { status, assignment, objective, bound: sign * bound, nodes })
    }
}

fn most_fractional(x: &[f64], fixed: &[Option<bool>]) -> Option<usize> {
    let mut pick: Option<(usize, f64)> = None;
    for (j, (&v, f)) in x.iter().zip(fixed).enumerate() {
        if f.is_some() {
            continue;
        }
        let frac = v.min(1.0 - v);
        if frac > INTEGRALITY_TOL && pick.is_none_or(|(_, best)| frac > best + 1e-12) {
            pick = Some((j, frac));
        }
    }
    pick.map(|(j, _)| j)
}
