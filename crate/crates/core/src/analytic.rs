//! Closed-form and single-LP equilibria for two special cases: mutually
//! disjoint monitoring sets with any budget, and a single sensor with
//! overlapping sets.

use crate::approx::decompose_marginals;
use crate::error::{contract, Error, Result};
use crate::game::{Instance, Marginals, MixedAttack, MixedDefense, PureDefense};
use crate::lp::{solve_lp, LinearProgram, Relation, Sense};

/// Whether no two monitoring sets share a component.
pub fn is_disjoint(inst: &Instance) -> bool {
    (0..inst.m()).all(|e| inst.covered_by(e).len() <= 1)
}

/// Number of sensed groups for weights sorted in non-increasing order:
/// the largest `j` with `(j - budget) / S_j <= w_j`, where `S_j` sums
/// `1 / w_i` over the first `j` entries.
pub fn largest_p(sorted_weights: &[f64], budget: usize) -> usize {
    let mut inverse_sum = 0.0;
    let mut p = 0;
    for (i, &w) in sorted_weights.iter().enumerate() {
        let j = i + 1;
        inverse_sum += 1.0 / w;
        if (j as f64 - budget as f64) <= w * inverse_sum {
            p = j;
        }
    }
    p
}

/// Most critical component of each node (lowest index on ties) and the
/// nodes ordered by that criticality, non-increasing, stable.
pub fn star_order(inst: &Instance) -> Result<(Vec<usize>, Vec<usize>)> {
    if !is_disjoint(inst) {
        return Err(contract("monitoring sets are not mutually disjoint"));
    }
    let star: Vec<usize> = (0..inst.n())
        .map(|v| {
            let set = inst.monitoring_set(v);
            let mut best = set[0];
            for &e in &set[1..] {
                if inst.weight(e) > inst.weight(best) {
                    best = e;
                }
            }
            best
        })
        .collect();
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&a, &b| inst.weight(star[b]).total_cmp(&inst.weight(star[a])));
    Ok((order, star))
}

/// `p` for a disjoint instance at its own budget.
pub fn largest_p_of(inst: &Instance) -> Result<usize> {
    let (order, star) = star_order(inst)?;
    let sorted: Vec<f64> = order.iter().map(|&v| inst.weight(star[v])).collect();
    Ok(largest_p(&sorted, inst.budget()))
}

/// Equilibrium of a game with disjoint monitoring sets.
#[derive(Debug, Clone, PartialEq)]
pub struct DisjointNE {
    pub p: usize,
    /// Sum of inverse star criticalities over the sensed groups.
    pub s_p: f64,
    pub value: f64,
    /// Sensor probability per node.
    pub marginals: Marginals,
    pub attack: MixedAttack,
    /// Most critical component of each node.
    pub star_components: Vec<usize>,
    /// Nodes by star criticality, non-increasing.
    pub order: Vec<usize>,
    budget: usize,
}

impl DisjointNE {
    /// A mixed placement realizing the marginals.
    pub fn defense(&self) -> Result<MixedDefense> {
        decompose_marginals(&self.marginals, self.budget)
    }
}

pub fn solve_disjoint(inst: &Instance) -> Result<DisjointNE> {
    let (order, star) = star_order(inst)?;
    let sorted: Vec<f64> = order.iter().map(|&v| inst.weight(star[v])).collect();
    let b = inst.budget();
    let p = largest_p(&sorted, b);
    let s_p: f64 = sorted[..p].iter().map(|w| 1.0 / w).sum();
    let value = (p - b) as f64 / s_p;

    let mut rho = vec![0.0; inst.n()];
    let mut probs = vec![0.0; inst.m()];
    for (j, &v) in order[..p].iter().enumerate() {
        let w = sorted[j];
        rho[v] = (1.0 - (p - b) as f64 / (w * s_p)).clamp(0.0, 1.0);
        probs[star[v]] = 1.0 / (w * s_p);
    }
    let attack = MixedAttack::new(probs)?;
    Ok(DisjointNE {
        p,
        s_p,
        value,
        marginals: Marginals(rho),
        attack,
        star_components: star,
        order,
        budget: b,
    })
}

/// Whether `p` at `budget` is at most `p` at `larger`; holds on every
/// disjoint instance.
pub fn check_p_monotonicity(inst: &Instance, budget: usize, larger: usize) -> Result<bool> {
    if !(budget < larger && larger <= inst.n()) || budget == 0 {
        return Err(contract(format!("need 1 <= {budget} < {larger} <= {}", inst.n())));
    }
    let (order, star) = star_order(inst)?;
    let sorted: Vec<f64> = order.iter().map(|&v| inst.weight(star[v])).collect();
    Ok(largest_p(&sorted, budget) <= largest_p(&sorted, larger))
}

/// Single-sensor equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleSensorNE {
    pub defense: MixedDefense,
    pub attack: MixedAttack,
    pub value: f64,
    /// Optimal values of the packing-style primal and covering-style dual,
    /// absent when a single node monitors everything.
    pub primal_objective: Option<f64>,
    pub dual_objective: Option<f64>,
}

/// Equilibrium for budget 1 via the pair
/// `max sum x  s.t.  sum_{v: e not in E_v} x_v <= 1/w_e` and
/// `min sum y_e/w_e  s.t.  sum_{e not in E_v} y_e >= 1`.
pub fn solve_single_sensor(inst: &Instance) -> Result<SingleSensorNE> {
    if inst.budget() != 1 {
        return Err(contract(format!("single-sensor solver needs budget 1, got {}", inst.budget())));
    }
    let (n, m) = (inst.n(), inst.m());
    if let Some(v) = (0..n).find(|&v| inst.monitoring_set(v).len() == m) {
        return Ok(SingleSensorNE {
            defense: MixedDefense::pure(PureDefense::new([v])),
            attack: MixedAttack::pure(m, 0)?,
            value: 0.0,
            primal_objective: None,
            dual_objective: None,
        });
    }
    let misses: Vec<Vec<bool>> = (0..n)
        .map(|v| {
            let mut out = vec![true; m];
            for &e in inst.monitoring_set(v) {
                out[e] = false;
            }
            out
        })
        .collect();

    let mut primal = LinearProgram::new(Sense::Maximize, vec![1.0; n]);
    for e in 0..m {
        let row: Vec<f64> = (0..n).map(|v| if misses[v][e] { 1.0 } else { 0.0 }).collect();
        primal.add_constraint(row, Relation::Le, 1.0 / inst.weight(e));
    }
    let weights = inst.weights();
    let mut dual = LinearProgram::new(Sense::Minimize, weights.iter().map(|w| 1.0 / w).collect());
    for row in &misses {
        dual.add_constraint(row.iter().map(|&miss| if miss { 1.0 } else { 0.0 }).collect(), Relation::Ge, 1.0);
    }
    let x = solve_lp(&primal)?;
    let y = solve_lp(&dual)?;
    if !x.is_optimal() || !y.is_optimal() {
        return Err(Error::Solver(format!(
            "single-sensor programs ended {:?} / {:?}",
            x.status, y.status
        )));
    }
    let j = y.objective;
    let defense = MixedDefense::from_weights((0..n).map(|v| (PureDefense::new([v]), x.x[v].max(0.0))))?;
    let probs: Vec<f64> = (0..m).map(|e| y.x[e].max(0.0) / (j * weights[e])).collect();
    let total: f64 = probs.iter().sum();
    let attack = MixedAttack::new(probs.iter().map(|p| p / total).collect())?;
    Ok(SingleSensorNE {
        defense,
        attack,
        value: 1.0 / j,
        primal_objective: Some(x.objective),
        dual_objective: Some(j),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::{four_node, singletons, three_component};
    use crate::game::{epsilon_of_profile, marginals};
    use crate::lp::DEFAULT_NODE_LIMIT;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn disjointness() {
        assert!(!is_disjoint(&four_node(vec![1.0; 7], 1)));
        assert!(is_disjoint(&singletons(vec![1.0, 0.5, 0.2], 1)));
        assert!(is_disjoint(&Instance::from_sets(vec![vec![0, 1]], vec![0.5, 0.5], 1).unwrap()));
    }

    #[test]
    fn sensed_group_counts() {
        assert_eq!(largest_p(&[1.0, 1.0, 0.25], 1), 2);
        assert_eq!(largest_p(&[1.0, 1.0, 0.25], 2), 3);
        assert_eq!(largest_p(&[0.3, 0.2, 0.1], 3), 3);
        assert!(largest_p_of(&four_node(vec![1.0; 7], 1)).is_err());
    }

    #[test]
    fn two_node_closed_form() {
        let inst = singletons(vec![1.0, 0.5], 1);
        let ne = solve_disjoint(&inst).unwrap();
        assert_eq!(ne.p, 2);
        assert!(close(ne.s_p, 3.0));
        assert!(close(ne.value, 1.0 / 3.0));
        assert!(close(ne.marginals.0[0], 2.0 / 3.0) && close(ne.marginals.0[1], 1.0 / 3.0));
        assert!(close(ne.attack.prob(0), 1.0 / 3.0) && close(ne.attack.prob(1), 2.0 / 3.0));
        let defense = ne.defense().unwrap();
        let eps = epsilon_of_profile(&inst, &defense, &ne.attack, DEFAULT_NODE_LIMIT).unwrap();
        assert!(eps <= 1e-7);
    }

    #[test]
    fn low_weight_group_is_left_alone() {
        let inst = singletons(vec![1.0, 1.0, 0.25], 1);
        let ne = solve_disjoint(&inst).unwrap();
        assert_eq!(ne.p, 2);
        assert!(close(ne.value, 0.5));
        assert_eq!(ne.marginals.0, vec![0.5, 0.5, 0.0]);
        assert_eq!(ne.attack.probs(), &[0.5, 0.5, 0.0]);
        assert!(0.25 < ne.value);
    }

    #[test]
    fn full_budget_monitors_everything() {
        let inst = singletons(vec![0.7, 0.4, 0.9], 3);
        let ne = solve_disjoint(&inst).unwrap();
        assert_eq!(ne.p, 3);
        assert_eq!(ne.value, 0.0);
        assert!(ne.marginals.0.iter().all(|&r| r == 1.0));
    }

    #[test]
    fn star_component_is_the_heaviest_in_its_group() {
        // v1 {e1, e2}, v2 {e3}; e2 outweighs e1
        let inst = Instance::from_sets(vec![vec![0, 1], vec![2]], vec![0.3, 0.9, 0.6], 1).unwrap();
        let ne = solve_disjoint(&inst).unwrap();
        assert_eq!(ne.star_components, vec![1, 2]);
        assert_eq!(ne.order, vec![0, 1]);
        assert_eq!(ne.attack.prob(0), 0.0);
        let eps = epsilon_of_profile(&inst, &ne.defense().unwrap(), &ne.attack, DEFAULT_NODE_LIMIT).unwrap();
        assert!(eps <= 1e-7);
    }

    #[test]
    fn sensed_groups_grow_with_budget() {
        let inst = singletons(vec![1.0, 1.0, 0.25], 1);
        assert!(check_p_monotonicity(&inst, 1, 2).unwrap());
        assert!(check_p_monotonicity(&inst, 1, 3).unwrap());
        assert!(check_p_monotonicity(&inst, 2, 1).is_err());
    }

    #[test]
    fn single_sensor_on_overlapping_sets() {
        let inst = three_component(vec![1.0; 3], 1);
        let ne = solve_single_sensor(&inst).unwrap();
        assert!(close(ne.value, 0.5));
        assert!(close(ne.dual_objective.unwrap(), 2.0));
        assert!(close(ne.primal_objective.unwrap(), 2.0));
        let rho = marginals(&inst, &ne.defense).unwrap();
        assert!(close(rho.0[0], 0.5) && close(rho.0[1], 0.5));
        assert!(close(ne.attack.prob(0), 0.5) && close(ne.attack.prob(1), 0.0) && close(ne.attack.prob(2), 0.5));
        let eps = epsilon_of_profile(&inst, &ne.defense, &ne.attack, DEFAULT_NODE_LIMIT).unwrap();
        assert!(eps <= 1e-7);
    }

    #[test]
    fn single_sensor_agrees_with_disjoint_formula() {
        let inst = singletons(vec![1.0, 0.5], 1);
        let a = solve_single_sensor(&inst).unwrap();
        let b = solve_disjoint(&inst).unwrap();
        assert!(close(a.value, b.value));
    }

    #[test]
    fn single_sensor_falls_back_to_a_covering_node() {
        let inst = Instance::from_sets(vec![vec![0], vec![0, 1]], vec![1.0, 1.0], 1).unwrap();
        let ne = solve_single_sensor(&inst).unwrap();
        assert_eq!(ne.value, 0.0);
        assert_eq!(ne.defense.support()[0].0.nodes(), &[1]);
        assert!(ne.primal_objective.is_none());
    }

    #[test]
    fn single_sensor_needs_budget_one() {
        let inst = three_component(vec![1.0; 3], 2);
        assert!(matches!(solve_single_sensor(&inst), Err(Error::Contract(_))));
    }
}
