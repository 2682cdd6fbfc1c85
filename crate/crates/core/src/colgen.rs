//! Column generation for the defender's program.
//!
//! The restricted master keeps a subset of placements as columns:
//!
//! ```text
//! min z  s.t.  sum_V a_V(e) s_V + z >= 0   for every component e
//!              sum_V s_V = 1,  s, z >= 0
//! ```
//!
//! with `a_V(e) = -w_e` when `e` is outside `E_V` and 0 otherwise. Its row
//! duals `rho` (components) and `pi` (convexity) price a placement at
//! `sum_{e outside E_V} rho_e w_e - pi`; the cheapest placement is a
//! budgeted maximum coverage with gains `rho_e w_e`.

use std::collections::HashSet;
use std::time::Instant;

use crate::cover::budgeted_coverage;
use crate::error::{validation, Error, Result};
use crate::game::{Instance, MixedAttack, MixedDefense, PureDefense};
use crate::lp::{BinaryProgram, LinearProgram, LpSolution, Relation, Sense, Simplex, DEFAULT_NODE_LIMIT};

/// Payoff column of placement `defense`: `-w_e` for every component it
/// leaves unmonitored, 0 elsewhere.
pub fn column_of(inst: &Instance, defense: &PureDefense) -> Result<Vec<f64>> {
    inst.check_defense(defense)?;
    Ok(inst
        .monitored(defense)
        .into_iter()
        .enumerate()
        .map(|(e, covered)| if covered { 0.0 } else { -inst.weight(e) })
        .collect())
}

/// Optimum of the restricted master.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub value: f64,
    /// Probability of each column, in column order.
    pub weights: Vec<f64>,
    /// Duals of the component rows.
    pub rho: Vec<f64>,
    /// Dual of the convexity row.
    pub pi: f64,
}

/// Restricted master with warm-started column addition.
pub struct MasterState {
    columns: Vec<PureDefense>,
    seen: HashSet<PureDefense>,
    simplex: Simplex,
    m: usize,
    solved: bool,
}

impl MasterState {
    pub fn new(inst: &Instance, columns: Vec<PureDefense>) -> Result<Self> {
        if columns.is_empty() {
            return Err(validation("restricted master needs at least one column"));
        }
        let m = inst.m();
        let mut seen = HashSet::with_capacity(columns.len());
        for v in &columns {
            if !seen.insert(v.clone()) {
                return Err(validation(format!("column {:?} given twice", v.nodes())));
            }
        }
        let lp = build_master(inst, &columns)?;
        Ok(MasterState { columns, seen, simplex: Simplex::new(&lp)?, m, solved: false })
    }

    pub fn columns(&self) -> &[PureDefense] {
        &self.columns
    }

    pub fn contains(&self, defense: &PureDefense) -> bool {
        self.seen.contains(defense)
    }

    /// Optimizes from the current basis (from scratch on the first call).
    pub fn solve(&mut self) -> Result<MasterSolution> {
        let sol = if self.solved { self.simplex.resolve()? } else { self.simplex.solve()? };
        self.solved = true;
        self.extract(sol)
    }

    /// Rebuilds the tableau and solves from scratch.
    pub fn solve_cold(&mut self) -> Result<MasterSolution> {
        let lp = self.simplex.program().clone();
        self.simplex = Simplex::new(&lp)?;
        self.solved = false;
        self.solve()
    }

    pub fn add_column(&mut self, inst: &Instance, defense: PureDefense) -> Result<()> {
        if self.seen.contains(&defense) {
            return Err(validation(format!("column {:?} already present", defense.nodes())));
        }
        let mut coeffs = column_of(inst, &defense)?;
        coeffs.push(1.0);
        if self.solved {
            self.simplex.add_column(0.0, &coeffs)?;
        } else {
            let mut lp = self.simplex.program().clone();
            append_column(&mut lp, &coeffs);
            self.simplex = Simplex::new(&lp)?;
        }
        self.seen.insert(defense.clone());
        self.columns.push(defense);
        Ok(())
    }

    fn extract(&self, sol: LpSolution) -> Result<MasterSolution> {
        if !sol.is_optimal() {
            return Err(Error::Solver(format!("restricted master ended {:?}", sol.status)));
        }
        // variable 0 is z, then one per column
        let weights = sol.x[1..].iter().map(|p| p.max(0.0)).collect();
        Ok(MasterSolution {
            value: sol.objective,
            weights,
            rho: sol.duals[..self.m].iter().map(|r| r.max(0.0)).collect(),
            pi: sol.duals[self.m],
        })
    }
}

fn build_master(inst: &Instance, columns: &[PureDefense]) -> Result<LinearProgram> {
    let m = inst.m();
    let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0]);
    for _ in 0..m {
        lp.add_constraint(vec![1.0], Relation::Ge, 0.0);
    }
    lp.add_constraint(vec![0.0], Relation::Eq, 1.0);
    for v in columns {
        let mut coeffs = column_of(inst, v)?;
        coeffs.push(1.0);
        append_column(&mut lp, &coeffs);
    }
    Ok(lp)
}

fn append_column(lp: &mut LinearProgram, coeffs: &[f64]) {
    lp.objective.push(0.0);
    lp.lower.push(0.0);
    lp.upper.push(f64::INFINITY);
    for (row, &a) in lp.constraints.iter_mut().zip(coeffs) {
        row.coeffs.push(a);
    }
}

/// Solves the restricted master over `columns` from scratch.
pub fn solve_master(inst: &Instance, columns: &[PureDefense]) -> Result<MasterSolution> {
    MasterState::new(inst, columns.to_vec())?.solve()
}

/// Cheapest placement against duals `(rho, pi)` and its reduced cost
/// `sum_{e outside E_V} rho_e w_e - pi`.
pub fn price_column(inst: &Instance, rho: &[f64], pi: f64, node_limit: usize) -> Result<(PureDefense, f64)> {
    if rho.len() != inst.m() {
        return Err(validation(format!("{} duals given for {} components", rho.len(), inst.m())));
    }
    if rho.iter().any(|r| !r.is_finite() || *r < 0.0) || !pi.is_finite() {
        return Err(validation("component duals must be finite and non-negative"));
    }
    let gains: Vec<f64> = rho.iter().zip(inst.weights()).map(|(r, w)| r * w).collect();
    let coverage = budgeted_coverage(inst, &gains, inst.budget(), node_limit)?;
    Ok((coverage.defense, coverage.uncovered - pi))
}

/// The pricing problem as a binary program over `x_v` (node placed) then
/// `y_e` (component unmonitored):
///
/// ```text
/// min sum_e rho_e w_e y_e  s.t.  sum_{v: e in E_v} x_v + y_e >= 1,  sum_v x_v <= budget
/// ```
///
/// Its optimum minus `pi` is the reduced cost returned by [`price_column`].
pub fn pricing_program(inst: &Instance, rho: &[f64]) -> Result<BinaryProgram> {
    if rho.len() != inst.m() {
        return Err(validation(format!("{} duals given for {} components", rho.len(), inst.m())));
    }
    let (n, m) = (inst.n(), inst.m());
    let mut objective = vec![0.0; n + m];
    for e in 0..m {
        objective[n + e] = rho[e] * inst.weight(e);
    }
    let mut bp = BinaryProgram::new(Sense::Minimize, objective);
    for e in 0..m {
        let mut row = vec![0.0; n + m];
        for &v in inst.covered_by(e) {
            row[v] = 1.0;
        }
        row[n + e] = 1.0;
        bp.add_constraint(row, Relation::Ge, 1.0);
    }
    let mut row = vec![0.0; n + m];
    row[..n].fill(1.0);
    bp.add_constraint(row, Relation::Le, inst.budget() as f64);
    Ok(bp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColGenConfig {
    /// Columns to add at most; `None` means ten times the node count.
    pub max_iters: Option<usize>,
    /// A column enters while its reduced cost is below `-tol`.
    pub tol: f64,
    pub node_limit: usize,
    /// Known game value; enables the ratio column of the trace.
    pub oracle_value: Option<f64>,
}

impl Default for ColGenConfig {
    fn default() -> Self {
        ColGenConfig { max_iters: None, tol: 1e-7, node_limit: DEFAULT_NODE_LIMIT, oracle_value: None }
    }
}

/// One master solve and the pricing that followed it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// Number of columns added before this master solve.
    pub iteration: usize,
    pub master_value: f64,
    pub reduced_cost: f64,
    /// Placement added after this row, if any.
    pub entering: Option<Vec<usize>>,
    /// Seconds since the run started.
    pub seconds: f64,
    /// Master value over the reference value.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ColGenTrace {
    pub rows: Vec<TraceRow>,
}

impl ColGenTrace {
    /// Fills the ratio column against `reference`; rows keep `None` when it
    /// is not positive.
    pub fn set_reference(&mut self, reference: f64) {
        for row in &mut self.rows {
            row.ratio = (reference > 0.0).then(|| row.master_value / reference);
        }
    }

    pub fn master_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.master_value).collect()
    }

    /// Whether master values never increase by more than `tol`.
    pub fn is_non_increasing(&self, tol: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].master_value <= w[0].master_value + tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColGenOutcome {
    pub defense: MixedDefense,
    /// Final master value; the game value when `converged`.
    pub value: f64,
    /// Attack read from the final component duals.
    pub attack: MixedAttack,
    pub converged: bool,
    pub trace: ColGenTrace,
    pub columns: Vec<PureDefense>,
}

/// Grows the restricted master from the support of `init` until no
/// placement has reduced cost below `-tol` or `max_iters` columns were
/// added.
pub fn run_colgen(inst: &Instance, init: &MixedDefense, config: &ColGenConfig) -> Result<ColGenOutcome> {
    inst.check_mixed_defense(init)?;
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(config.tol >= 0.0) {
        return Err(validation("tolerance must be non-negative"));
    }
    let max_iters = config.max_iters.unwrap_or(10 * inst.n());
    let start = Instant::now();
    let columns: Vec<PureDefense> = init.support().iter().map(|(v, _)| v.clone()).collect();
    let mut master = MasterState::new(inst, columns)?;
    let mut trace = ColGenTrace::default();
    let mut added = 0usize;

    loop {
        let mut sol = master.solve()?;
        let (mut entering, mut reduced) = price_column(inst, &sol.rho, sol.pi, config.node_limit)?;
        if reduced < -config.tol && master.contains(&entering) {
            // drift in the warm tableau; refactor once before giving up
            sol = master.solve_cold()?;
            (entering, reduced) = price_column(inst, &sol.rho, sol.pi, config.node_limit)?;
            if reduced < -config.tol && master.contains(&entering) {
                return Err(Error::NumericalStall {
                    iteration: added,
                    reduced_cost: reduced,
                    column: entering.nodes().to_vec(),
                    pi: sol.pi,
                    rho: sol.rho,
                });
            }
        }
        let improving = reduced < -config.tol;
        let stop = !improving || added >= max_iters;
        trace.rows.push(TraceRow {
            iteration: added,
            master_value: sol.value,
            reduced_cost: reduced,
            entering: (improving && !stop).then(|| entering.nodes().to_vec()),
            seconds: start.elapsed().as_secs_f64(),
            ratio: None,
        });
        if stop {
            if let Some(reference) = config.oracle_value {
                trace.set_reference(reference);
            }
            let defense = MixedDefense::from_weights(master.columns().iter().cloned().zip(sol.weights.iter().copied()))?;
            let attack = attack_from_duals(inst, &sol.rho)?;
            return Ok(ColGenOutcome {
                defense,
                value: sol.value,
                attack,
                converged: !improving,
                trace,
                columns: master.columns().to_vec(),
            });
        }
        master.add_column(inst, entering)?;
        added += 1;
    }
}

fn attack_from_duals(inst: &Instance, rho: &[f64]) -> Result<MixedAttack> {
    let total: f64 = rho.iter().sum();
    if total <= 1e-12 {
        // value 0: every attack is a best reply
        return MixedAttack::pure(inst.m(), 0);
    }
    MixedAttack::new(rho.iter().map(|r| r / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::solve_cover_packing;
    use crate::cover::CoverConfig;
    use crate::game::fixtures::{four_node, singletons, three_component};
    use crate::game::epsilon_of_profile;

    #[test]
    fn payoff_columns() {
        let inst = four_node(vec![1.0; 7], 1);
        assert_eq!(
            column_of(&inst, &PureDefense::new([0])).unwrap(),
            vec![0.0, 0.0, -1.0, -1.0, -1.0, -1.0, -1.0]
        );
        let inst = inst.with_budget(2).unwrap();
        assert!(column_of(&inst, &PureDefense::new([0, 2])).unwrap().iter().all(|&a| a == 0.0));
        assert_eq!(column_of(&inst, &PureDefense::empty()).unwrap(), vec![-1.0; 7]);
    }

    #[test]
    fn master_on_two_columns() {
        let inst = three_component(vec![1.0; 3], 1);
        let sol = solve_master(&inst, &[PureDefense::new([0]), PureDefense::new([1])]).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-12);
        assert!((sol.weights[0] - 0.5).abs() < 1e-12 && (sol.weights[1] - 0.5).abs() < 1e-12);
        for (got, want) in sol.rho.iter().zip([0.5, 0.0, 0.5]) {
            assert!((got - want).abs() < 1e-12, "{:?}", sol.rho);
        }
        assert!((sol.pi - 0.5).abs() < 1e-12);
    }

    #[test]
    fn master_on_a_cover_is_zero() {
        let inst = four_node(vec![1.0; 7], 2);
        let sol = solve_master(&inst, &[PureDefense::new([0, 2])]).unwrap();
        assert!(sol.value.abs() < 1e-12);
    }

    #[test]
    fn master_rejects_duplicates() {
        let inst = three_component(vec![1.0; 3], 1);
        assert!(solve_master(&inst, &[PureDefense::new([0]), PureDefense::new([0])]).is_err());
        assert!(solve_master(&inst, &[]).is_err());
    }

    #[test]
    fn pricing_at_the_optimum_is_zero() {
        let inst = three_component(vec![1.0; 3], 1);
        let (v, c) = price_column(&inst, &[0.5, 0.0, 0.5], 0.5, DEFAULT_NODE_LIMIT).unwrap();
        assert!(c.abs() < 1e-12);
        assert_eq!(v.len(), 1);
        let (_, c) = price_column(&inst, &[0.0; 3], 0.0, DEFAULT_NODE_LIMIT).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn pricing_program_matches_coverage() {
        use crate::lp::solve_binary;
        let inst = four_node(vec![0.9, 1.0, 0.5, 0.25, 1.0, 0.75, 0.5], 1);
        let rho = [0.125, 0.25, 0.0, 0.375, 0.125, 0.0, 0.125];
        let bp = pricing_program(&inst, &rho).unwrap();
        let sol = solve_binary(&bp, DEFAULT_NODE_LIMIT).unwrap();
        let (_, c) = price_column(&inst, &rho, 0.25, DEFAULT_NODE_LIMIT).unwrap();
        assert!((sol.objective.unwrap() - 0.25 - c).abs() < 1e-12);
    }

    #[test]
    fn pricing_with_a_covering_budget() {
        let inst = four_node(vec![1.0; 7], 2);
        let rho = vec![1.0 / 7.0; 7];
        let (v, c) = price_column(&inst, &rho, 0.0, DEFAULT_NODE_LIMIT).unwrap();
        assert!(inst.is_cover(&v));
        assert_eq!(c, 0.0);
        let (_, c) = price_column(&inst, &rho, 0.1, DEFAULT_NODE_LIMIT).unwrap();
        assert!((c + 0.1).abs() < 1e-12);
    }

    #[test]
    fn stops_immediately_at_an_equilibrium_support() {
        let inst = three_component(vec![1.0; 3], 1);
        let init = MixedDefense::new(vec![(PureDefense::new([0]), 0.5), (PureDefense::new([1]), 0.5)]).unwrap();
        let out = run_colgen(&inst, &init, &ColGenConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.trace.rows.len(), 1);
        assert!((out.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reaches_the_disjoint_value_from_the_cover_profile() {
        let inst = singletons(vec![1.0, 1.0, 0.25], 1);
        let init = solve_cover_packing(&inst, &CoverConfig::default()).unwrap().defense;
        let config = ColGenConfig { oracle_value: Some(0.5), ..ColGenConfig::default() };
        let out = run_colgen(&inst, &init, &config).unwrap();
        assert!(out.converged);
        assert!((out.value - 0.5).abs() < 1e-9);
        assert!(out.trace.is_non_increasing(1e-12));
        let last = out.trace.rows.last().unwrap();
        assert!((last.ratio.unwrap() - 1.0).abs() < 1e-9);
        let eps = epsilon_of_profile(&inst, &out.defense, &out.attack, DEFAULT_NODE_LIMIT).unwrap();
        assert!(eps < 1e-7);
    }

    #[test]
    fn covering_budget_gives_zero_at_once() {
        let inst = four_node(vec![0.5; 7], 2);
        let init = MixedDefense::pure(PureDefense::new([0, 2]));
        let out = run_colgen(&inst, &init, &ColGenConfig::default()).unwrap();
        assert!(out.converged && out.value.abs() < 1e-12);
        assert_eq!(out.trace.rows.len(), 1);
    }

    #[test]
    fn iteration_cap_returns_the_incumbent() {
        let inst = singletons(vec![1.0, 0.9, 0.8, 0.7], 1);
        let init = MixedDefense::pure(PureDefense::new([0]));
        let config = ColGenConfig { max_iters: Some(1), ..ColGenConfig::default() };
        let out = run_colgen(&inst, &init, &config).unwrap();
        assert!(!out.converged);
        assert_eq!(out.trace.rows.len(), 2);
        assert!(out.value >= 0.0);
    }
}
