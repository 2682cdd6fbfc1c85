//! Exact game solution by enumerating every placement and solving the
//! defender and attacker linear programs of the full matrix game.

use crate::error::{Error, Result};
use crate::game::{Instance, MixedAttack, MixedDefense, PureDefense};
use crate::lp::{solve_lp, LinearProgram, Relation, Sense};

/// Default bound on the number of enumerated placements.
pub const DEFAULT_ACTION_CAP: usize = 200_000;

/// Above this many placements the attacker program (one row per placement)
/// is not built; its solution is read off the defender program's duals.
pub const ATTACKER_PROGRAM_LIMIT: usize = 4_000;

/// Number of placements of at most `budget` out of `n` nodes, saturating.
pub fn action_count(n: usize, budget: usize) -> usize {
    let mut total: usize = 0;
    let mut binom: u128 = 1;
    for k in 0..=budget.min(n) {
        if k > 0 {
            binom = binom * (n - k + 1) as u128 / k as u128;
        }
        total = total.saturating_add(usize::try_from(binom).unwrap_or(usize::MAX));
    }
    total
}

/// All placements of at most `budget` nodes, the empty one included, in
/// lexicographic order of their sorted node lists.
pub fn enumerate_defenses(inst: &Instance, cap: usize) -> Result<Vec<PureDefense>> {
    let count = action_count(inst.n(), inst.budget());
    if count > cap {
        return Err(Error::Resource {
            what: format!(
                "enumerating {count} placements (use column generation for instances this large)"
            ),
            limit: cap,
            bound: None,
            incumbent: None,
        });
    }
    let mut out = Vec::with_capacity(count);
    let mut current = Vec::with_capacity(inst.budget());
    extend(inst.n(), inst.budget(), 0, &mut current, &mut out);
    Ok(out)
}

fn extend(n: usize, budget: usize, from: usize, current: &mut Vec<usize>, out: &mut Vec<PureDefense>) {
    out.push(PureDefense::new(current.iter().copied()));
    if current.len() == budget {
        return;
    }
    for v in from..n {
        current.push(v);
        extend(n, budget, v + 1, current, out);
        current.pop();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Optimal value of the defender program.
    pub value: f64,
    /// Optimal value of the attacker program.
    pub lp2_value: f64,
    pub defense: MixedDefense,
    pub attack: MixedAttack,
    pub action_count: usize,
}

/// Solves the full matrix game:
/// `min z  s.t.  sum_V s_V l(V,e) <= z for all e, sum s = 1` for the
/// defender and `max z  s.t.  sum_e t_e l(V,e) >= z for all V, sum t = 1`
/// for the attacker. Large action sets take the attacker strategy from the
/// defender program's duals instead.
pub fn solve_exact(inst: &Instance, cap: usize) -> Result<OracleResult> {
    let actions = enumerate_defenses(inst, cap)?;
    let (k, m) = (actions.len(), inst.m());
    let monitored: Vec<Vec<bool>> = actions.iter().map(|v| inst.monitored(v)).collect();
    let loss = |a: usize, e: usize| if monitored[a][e] { 0.0 } else { inst.weight(e) };

    // variables: s_1..s_k, z
    let mut objective = vec![0.0; k + 1];
    objective[k] = 1.0;
    let mut defender = LinearProgram::new(Sense::Minimize, objective);
    for e in 0..m {
        let mut row: Vec<f64> = (0..k).map(|a| loss(a, e)).collect();
        row.push(-1.0);
        defender.add_constraint(row, Relation::Le, 0.0);
    }
    let mut row = vec![1.0; k + 1];
    row[k] = 0.0;
    defender.add_constraint(row, Relation::Eq, 1.0);

    let d = solve_lp(&defender)?;
    if !d.is_optimal() {
        return Err(Error::Solver(format!("defender program ended {:?}", d.status)));
    }
    let defense = MixedDefense::from_weights(actions.iter().cloned().zip(d.x[..k].iter().map(|p| p.max(0.0))))?;

    let (probs, lp2_value) = if k <= ATTACKER_PROGRAM_LIMIT {
        // variables: t_1..t_m, z
        let mut objective = vec![0.0; m + 1];
        objective[m] = 1.0;
        let mut attacker = LinearProgram::new(Sense::Maximize, objective);
        for a in 0..k {
            let mut row: Vec<f64> = (0..m).map(|e| loss(a, e)).collect();
            row.push(-1.0);
            attacker.add_constraint(row, Relation::Ge, 0.0);
        }
        let mut row = vec![1.0; m + 1];
        row[m] = 0.0;
        attacker.add_constraint(row, Relation::Eq, 1.0);
        let a = solve_lp(&attacker)?;
        if !a.is_optimal() {
            return Err(Error::Solver(format!("attacker program ended {:?}", a.status)));
        }
        (a.x[..m].iter().map(|p| p.max(0.0)).collect::<Vec<f64>>(), a.objective)
    } else {
        // shadow prices of the loss rows are minus the attack probabilities
        (d.duals[..m].iter().map(|y| (-y).max(0.0)).collect(), d.dual_objective(&defender))
    };
    let total: f64 = probs.iter().sum();
    let attack = MixedAttack::new(probs.iter().map(|p| p / total).collect())?;
    Ok(OracleResult { value: d.objective, lp2_value, defense, attack, action_count: k })
}
