use super::{LinearProgram, LpSolution, LpStatus, Relation, Sense};
use crate::error::{validation, Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-12;
const DROP_TOL: f64 = 1e-14;

/// How an original variable is expressed through internal columns, all of
/// which live in `[0, upper]`.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = offset + col`
    Shift { col: usize, offset: f64 },
    /// `x = offset - col`
    Mirror { col: usize, offset: f64 },
    /// `x = pos - neg`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Dense bounded-variable tableau simplex.
///
/// Rows are normalized to a non-negative right-hand side and every row gets
/// an identity column (a slack or an artificial), so `B^-1` can always be
/// read off those columns. That gives the row duals of the final basis and
/// lets [`Simplex::add_column`] price a new column against the current basis
/// without refactoring.
#[derive(Debug, Clone)]
pub struct Simplex {
    lp: LinearProgram,
    map: Vec<VarMap>,
    row_sign: Vec<f64>,
    rows: Vec<Vec<f64>>,
    values: Vec<f64>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    basis: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    identity: Vec<usize>,
    kind: Vec<ColKind>,
    iterations: usize,
    status: Option<LpStatus>,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Simplex {
    pub fn new(lp: &LinearProgram) -> Result<Self> {
        lp.validate()?;
        let m = lp.constraints.len();
        let maximize = lp.sense == Sense::Maximize;
        let sign = if maximize { -1.0 } else { 1.0 };

        let mut map = Vec::with_capacity(lp.num_vars());
        // internal structural columns: (coefficients over rows, cost, upper)
        let mut columns: Vec<(Vec<f64>, f64, f64)> = Vec::new();
        let mut rhs: Vec<f64> = lp.constraints.iter().map(|r| r.rhs).collect();
        for j in 0..lp.num_vars() {
            let (lo, hi, c) = (lp.lower[j], lp.upper[j], lp.objective[j] * sign);
            let coeffs: Vec<f64> = lp.constraints.iter().map(|r| r.coeffs[j]).collect();
            if lo.is_finite() {
                for (b, a) in rhs.iter_mut().zip(&coeffs) {
                    *b -= a * lo;
                }
                map.push(VarMap::Shift { col: columns.len(), offset: lo });
                columns.push((coeffs, c, hi - lo));
            } else if hi.is_finite() {
                for (b, a) in rhs.iter_mut().zip(&coeffs) {
                    *b -= a * hi;
                }
                map.push(VarMap::Mirror { col: columns.len(), offset: hi });
                columns.push((coeffs.iter().map(|a| -a).collect(), -c, f64::INFINITY));
            } else {
                let pos = columns.len();
                map.push(VarMap::Split { pos, neg: pos + 1 });
                let neg = coeffs.iter().map(|a| -a).collect();
                columns.push((coeffs, c, f64::INFINITY));
                columns.push((neg, -c, f64::INFINITY));
            }
        }

        let n_struct = columns.len();
        let mut row_sign = vec![1.0; m];
        // normalized relation per row after the sign flip
        let mut relation = Vec::with_capacity(m);
        for (i, row) in lp.constraints.iter().enumerate() {
            let b = rhs[i];
            let (s, rel) = match row.relation {
                Relation::Le if b >= 0.0 => (1.0, Relation::Le),
                Relation::Le => (-1.0, Relation::Ge),
                // a zero right-hand side flips to a slack row and needs no artificial
                Relation::Ge if b <= 0.0 => (-1.0, Relation::Le),
                Relation::Ge => (1.0, Relation::Ge),
                Relation::Eq if b < 0.0 => (-1.0, Relation::Eq),
                Relation::Eq => (1.0, Relation::Eq),
            };
            row_sign[i] = s;
            rhs[i] = b * s;
            relation.push(rel);
        }

        let mut kind = vec![ColKind::Structural; n_struct];
        let mut cost: Vec<f64> = columns.iter().map(|c| c.1).collect();
        let mut upper: Vec<f64> = columns.iter().map(|c| c.2).collect();
        let mut rows: Vec<Vec<f64>> = (0..m)
            .map(|i| columns.iter().map(|c| c.0[i] * row_sign[i]).collect())
            .collect();
        let mut identity = vec![0; m];
        for i in 0..m {
            let mut push_col = |entry: f64, k: ColKind| -> usize {
                for (r, row) in rows.iter_mut().enumerate() {
                    row.push(if r == i { entry } else { 0.0 });
                }
                kind.push(k);
                cost.push(0.0);
                upper.push(f64::INFINITY);
                kind.len() - 1
            };
            identity[i] = match relation[i] {
                Relation::Le => push_col(1.0, ColKind::Slack),
                Relation::Ge => {
                    push_col(-1.0, ColKind::Slack);
                    push_col(1.0, ColKind::Artificial)
                }
                Relation::Eq => push_col(1.0, ColKind::Artificial),
            };
        }

        let ncols = kind.len();
        let mut basic_row = vec![None; ncols];
        for (i, &col) in identity.iter().enumerate() {
            basic_row[col] = Some(i);
        }
        Ok(Simplex {
            lp: lp.clone(),
            map,
            row_sign,
            rows,
            values: rhs,
            cost,
            reduced: vec![0.0; ncols],
            upper,
            at_upper: vec![false; ncols],
            basis: identity.clone(),
            basic_row,
            identity,
            kind,
            iterations: 0,
            status: None,
        })
    }

    /// The program as currently held, including columns added since
    /// construction.
    pub fn program(&self) -> &LinearProgram {
        &self.lp
    }

    /// Runs both phases from the initial slack/artificial basis.
    pub fn solve(&mut self) -> Result<LpSolution> {
        let phase_one: Vec<f64> = self
            .kind
            .iter()
            .map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 })
            .collect();
        self.price_all(&phase_one);
        self.optimize()?;
        let infeasibility: f64 = self
            .basis
            .iter()
            .zip(&self.values)
            .filter(|(c, _)| self.kind[**c] == ColKind::Artificial)
            .map(|(_, v)| v.max(0.0))
            .sum();
        let scale = 1.0 + self.lp.constraints.iter().fold(0.0f64, |a, r| a.max(r.rhs.abs()));
        if infeasibility > FEAS_TOL * scale {
            self.status = Some(LpStatus::Infeasible);
            return Ok(self.extract(LpStatus::Infeasible));
        }
        self.expel_artificials();
        self.resolve()
    }

    /// Re-optimizes phase two from the current basis. Valid after a solve
    /// that ended optimal, typically following [`Simplex::add_column`].
    pub fn resolve(&mut self) -> Result<LpSolution> {
        let cost = self.cost.clone();
        self.price_all(&cost);
        let status = match self.optimize()? {
            Step::Optimal => LpStatus::Optimal,
            Step::Unbounded => LpStatus::Unbounded,
        };
        self.status = Some(status);
        Ok(self.extract(status))
    }

    /// Appends a variable `x >= 0` with objective coefficient `objective`
    /// and constraint coefficients `coeffs`; returns its index. The current
    /// basis stays primal feasible, so [`Simplex::resolve`] warm-starts.
    pub fn add_column(&mut self, objective: f64, coeffs: &[f64]) -> Result<usize> {
        if self.status != Some(LpStatus::Optimal) {
            return Err(Error::Solver("columns can only be added to an optimally solved program".into()));
        }
        if coeffs.len() != self.rows.len() {
            return Err(validation(format!(
                "new column has {} coefficients, expected {}",
                coeffs.len(),
                self.rows.len()
            )));
        }
        if !objective.is_finite() || coeffs.iter().any(|a| !a.is_finite()) {
            return Err(validation("new column has non-finite data"));
        }
        self.lp.objective.push(objective);
        self.lp.lower.push(0.0);
        self.lp.upper.push(f64::INFINITY);
        for (row, &a) in self.lp.constraints.iter_mut().zip(coeffs) {
            row.coeffs.push(a);
        }

        let internal: Vec<f64> = coeffs.iter().zip(&self.row_sign).map(|(a, s)| a * s).collect();
        let column: Vec<f64> = self
            .rows
            .iter()
            .map(|row| {
                self.identity
                    .iter()
                    .zip(&internal)
                    .map(|(&id, a)| row[id] * a)
                    .sum()
            })
            .collect();
        let c = if self.lp.sense == Sense::Maximize { -objective } else { objective };
        let reduced = c - self
            .basis
            .iter()
            .zip(&column)
            .map(|(&b, t)| self.cost[b] * t)
            .sum::<f64>();
        for (row, t) in self.rows.iter_mut().zip(column) {
            row.push(t);
        }
        let col = self.kind.len();
        self.kind.push(ColKind::Structural);
        self.cost.push(c);
        self.reduced.push(reduced);
        self.upper.push(f64::INFINITY);
        self.at_upper.push(false);
        self.basic_row.push(None);
        self.map.push(VarMap::Shift { col, offset: 0.0 });
        Ok(self.lp.num_vars() - 1)
    }

    fn price_all(&mut self, cost: &[f64]) {
        let mut reduced = cost.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (d, a) in reduced.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            reduced[b] = 0.0;
        }
        self.reduced = reduced;
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.kind.len() {
            if self.basic_row[j].is_some() || self.upper[j] <= 0.0 {
                continue;
            }
            let d = self.reduced[j];
            let (score, dir) = if !self.at_upper[j] && d < -COST_TOL {
                (-d, 1.0)
            } else if self.at_upper[j] && d > COST_TOL {
                (d, -1.0)
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, s, _)| score > s) {
                best = Some((j, score, dir));
            }
        }
        best.map(|(j, _, dir)| (j, dir))
    }

    fn optimize(&mut self) -> Result<Step> {
        let m = self.rows.len();
        let switch = 2 * (m + self.kind.len());
        let cap = 50 * (m + self.kind.len()) + 10_000;
        let mut local = 0usize;
        loop {
            let bland = local >= switch;
            let Some((enter, dir)) = self.choose_entering(bland) else {
                return Ok(Step::Optimal);
            };
            if local >= cap {
                return Err(Error::Solver(format!("simplex did not terminate within {cap} iterations")));
            }
            local += 1;
            self.iterations += 1;

            // ratio test: step length, leaving row and whether it leaves at its upper bound
            let mut step = self.upper[enter];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0f64;
            for i in 0..m {
                let alpha = self.rows[i][enter] * dir;
                let b = self.basis[i];
                let (limit, to_upper) = if alpha > PIVOT_TOL {
                    (self.values[i].max(0.0) / alpha, false)
                } else if alpha < -PIVOT_TOL && self.upper[b].is_finite() {
                    ((self.upper[b] - self.values[i]).max(0.0) / -alpha, true)
                } else {
                    continue;
                };
                let better = if limit < step - TIE_TOL {
                    true
                } else if limit <= step + TIE_TOL {
                    match leave {
                        // tie with the entering bound flip: keep the flip
                        None => false,
                        Some((r, _)) if bland => b < self.basis[r],
                        Some(_) => alpha.abs() > leave_alpha.abs(),
                    }
                } else {
                    false
                };
                if better {
                    step = limit.min(step);
                    leave = Some((i, to_upper));
                    leave_alpha = alpha;
                }
            }
            if step.is_infinite() {
                return Ok(Step::Unbounded);
            }

            for i in 0..m {
                let a = self.rows[i][enter];
                if a != 0.0 {
                    self.values[i] -= a * dir * step;
                }
            }
            let start = if self.at_upper[enter] { self.upper[enter] } else { 0.0 };
            match leave {
                None => {
                    self.at_upper[enter] = !self.at_upper[enter];
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.pivot(r, enter);
                    self.values[r] = start + dir * step;
                    self.at_upper[out] = to_upper;
                    self.at_upper[enter] = false;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, enter: usize) {
        let out = self.basis[r];
        let piv = self.rows[r][enter];
        let pivot_row: Vec<f64> = self.rows[r].iter().map(|a| a / piv).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[enter];
            if f == 0.0 {
                continue;
            }
            for (a, p) in row.iter_mut().zip(&pivot_row) {
                if *p != 0.0 {
                    *a -= f * p;
                    if a.abs() < DROP_TOL {
                        *a = 0.0;
                    }
                }
            }
            row[enter] = 0.0;
        }
        let f = self.reduced[enter];
        if f != 0.0 {
            for (d, p) in self.reduced.iter_mut().zip(&pivot_row) {
                *d -= f * p;
            }
        }
        self.reduced[enter] = 0.0;
        self.rows[r] = pivot_row;
        self.rows[r][enter] = 1.0;
        self.basis[r] = enter;
        self.basic_row[out] = None;
        self.basic_row[enter] = Some(r);
    }

    /// Pivots zero-valued artificials out of the basis where possible and
    /// fixes all artificials at zero. Rows where no pivot exists are
    /// redundant and keep their artificial basic at zero.
    fn expel_artificials(&mut self) {
        for r in 0..self.rows.len() {
            if self.kind[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.kind.len() {
                if self.kind[j] == ColKind::Artificial || self.basic_row[j].is_some() {
                    continue;
                }
                let a = self.rows[r][j].abs();
                if a > PIVOT_TOL && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                let value = if self.at_upper[j] { self.upper[j] } else { 0.0 };
                let out = self.basis[r];
                self.pivot(r, j);
                self.values[r] = value;
                self.at_upper[out] = false;
                self.at_upper[j] = false;
            }
        }
        for j in 0..self.kind.len() {
            if self.kind[j] == ColKind::Artificial {
                self.upper[j] = 0.0;
            }
        }
    }

    fn column_value(&self, col: usize) -> f64 {
        match self.basic_row[col] {
            Some(r) => self.values[r],
            None if self.at_upper[col] => self.upper[col],
            None => 0.0,
        }
    }

    fn extract(&self, status: LpStatus) -> LpSolution {
        let x: Vec<f64> = self
            .map
            .iter()
            .map(|m| match *m {
                VarMap::Shift { col, offset } => offset + self.column_value(col),
                VarMap::Mirror { col, offset } => offset - self.column_value(col),
                VarMap::Split { pos, neg } => self.column_value(pos) - self.column_value(neg),
            })
            .collect();
        let flip = if self.lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let duals: Vec<f64> = if status == LpStatus::Optimal {
            self.identity
                .iter()
                .zip(&self.row_sign)
                .map(|(&id, s)| -self.reduced[id] * s * flip)
                .collect()
        } else {
            vec![0.0; self.rows.len()]
        };
        let reduced_costs = (0..self.lp.num_vars())
            .map(|j| {
                self.lp.objective[j]
                    - self
                        .lp
                        .constraints
                        .iter()
                        .zip(&duals)
                        .map(|(r, y)| r.coeffs[j] * y)
                        .sum::<f64>()
            })
            .collect();
        LpSolution {
            status,
            objective: self.lp.objective_value(&x),
            x,
            duals,
            reduced_costs,
            iterations: self.iterations,
        }
    }
}
