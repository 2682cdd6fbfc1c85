//! Game instance, strategies and payoff evaluation.
//!
//! The operator places at most `budget` sensors on nodes; a sensor at `v`
//! detects attacks on the components of its monitoring set `E_v`. The
//! attacker picks one component `e` and inflicts its criticality `w_e`
//! unless `e` is monitored. The operator minimizes, the attacker maximizes.

use std::collections::{HashMap, HashSet};

use crate::cover::budgeted_coverage;
use crate::error::{validation, Result};

/// Tolerance applied when constructing strategies.
pub const CONSTRUCTION_TOL: f64 = 1e-9;
/// Tolerance applied when verifying equilibrium properties.
pub const VERIFY_TOL: f64 = 1e-7;

/// Nodes, components, monitoring sets, criticalities and the sensor budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    nodes: Vec<String>,
    components: Vec<String>,
    monitoring: Vec<Vec<usize>>,
    weights: Vec<f64>,
    budget: usize,
    covered_by: Vec<Vec<usize>>,
    node_index: HashMap<String, usize>,
    component_index: HashMap<String, usize>,
}

impl Instance {
    /// Builds and validates an instance. `monitoring[v]` lists component
    /// indices; duplicates are dropped and each set is stored sorted.
    pub fn new(
        nodes: Vec<String>,
        components: Vec<String>,
        monitoring: Vec<Vec<usize>>,
        weights: Vec<f64>,
        budget: usize,
    ) -> Result<Self> {
        let n = nodes.len();
        let m = components.len();
        if n == 0 || m == 0 {
            return Err(validation("an instance needs at least one node and one component"));
        }
        let node_index = index_names(&nodes, "node")?;
        let component_index = index_names(&components, "component")?;
        if monitoring.len() != n {
            return Err(validation(format!("{} monitoring sets given for {n} nodes", monitoring.len())));
        }
        if weights.len() != m {
            return Err(validation(format!("{} weights given for {m} components", weights.len())));
        }
        for (e, &w) in weights.iter().enumerate() {
            if !(w > 0.0 && w <= 1.0) {
                return Err(validation(format!(
                    "criticality of component {} must lie in (0, 1], got {w}",
                    components[e]
                )));
            }
        }
        if budget == 0 || budget > n {
            return Err(validation(format!("budget must lie in 1..={n}, got {budget}")));
        }
        let mut sets = Vec::with_capacity(n);
        let mut covered_by = vec![Vec::new(); m];
        for (v, set) in monitoring.into_iter().enumerate() {
            let mut set = set;
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(validation(format!("monitoring set of node {} is empty", nodes[v])));
            }
            if let Some(&bad) = set.iter().find(|&&e| e >= m) {
                return Err(validation(format!("node {} monitors unknown component index {bad}", nodes[v])));
            }
            for &e in &set {
                covered_by[e].push(v);
            }
            sets.push(set);
        }
        if let Some(e) = covered_by.iter().position(Vec::is_empty) {
            return Err(validation(format!(
                "component {} is not monitored by any node",
                components[e]
            )));
        }
        Ok(Instance {
            nodes,
            components,
            monitoring: sets,
            weights,
            budget,
            covered_by,
            node_index,
            component_index,
        })
    }

    /// Instance with generated names `v1..vn` and `e1..em`.
    pub fn from_sets(monitoring: Vec<Vec<usize>>, weights: Vec<f64>, budget: usize) -> Result<Self> {
        let nodes = (1..=monitoring.len()).map(|i| format!("v{i}")).collect();
        let components = (1..=weights.len()).map(|i| format!("e{i}")).collect();
        Instance::new(nodes, components, monitoring, weights, budget)
    }

    /// Same game with a different budget.
    pub fn with_budget(&self, budget: usize) -> Result<Self> {
        if budget == 0 || budget > self.n() {
            return Err(validation(format!("budget must lie in 1..={}, got {budget}", self.n())));
        }
        Ok(Instance { budget, ..self.clone() })
    }

    /// Same game with different criticalities.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Instance::new(
            self.nodes.clone(),
            self.components.clone(),
            self.monitoring.clone(),
            weights,
            self.budget,
        )
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.weights[e]
    }

    pub fn w_min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn w_max(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// `E_v`, sorted.
    pub fn monitoring_set(&self, v: usize) -> &[usize] {
        &self.monitoring[v]
    }

    pub fn monitoring_sets(&self) -> &[Vec<usize>] {
        &self.monitoring
    }

    /// Nodes whose monitoring set contains `e`, sorted.
    pub fn covered_by(&self, e: usize) -> &[usize] {
        &self.covered_by[e]
    }

    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    pub fn component_names(&self) -> &[String] {
        &self.components
    }

    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.node_index.get(name).copied()
    }

    pub fn component_id(&self, name: &str) -> Option<usize> {
        self.component_index.get(name).copied()
    }

    pub fn check_component(&self, e: usize) -> Result<()> {
        if e < self.m() {
            Ok(())
        } else {
            Err(validation(format!("unknown component index {e}")))
        }
    }

    /// Checks that every member of `nodes` is a known node.
    pub fn check_nodes(&self, nodes: &PureDefense) -> Result<()> {
        match nodes.nodes().iter().find(|&&v| v >= self.n()) {
            Some(&v) => Err(validation(format!("unknown node index {v}"))),
            None => Ok(()),
        }
    }

    /// Checks that `defense` names known nodes and respects the budget.
    pub fn check_defense(&self, defense: &PureDefense) -> Result<()> {
        self.check_nodes(defense)?;
        if defense.len() > self.budget {
            return Err(validation(format!(
                "placement uses {} sensors but the budget is {}",
                defense.len(),
                self.budget
            )));
        }
        Ok(())
    }

    pub fn check_mixed_defense(&self, sigma1: &MixedDefense) -> Result<()> {
        sigma1.support().iter().try_for_each(|(v, _)| self.check_defense(v))
    }

    pub fn check_attack(&self, sigma2: &MixedAttack) -> Result<()> {
        if sigma2.probs().len() != self.m() {
            return Err(validation(format!(
                "attack has {} entries for {} components",
                sigma2.probs().len(),
                self.m()
            )));
        }
        Ok(())
    }

    /// Membership mask of `E_V`.
    pub fn monitored(&self, defense: &PureDefense) -> Vec<bool> {
        let mut mask = vec![false; self.m()];
        for &v in defense.nodes() {
            for &e in &self.monitoring[v] {
                mask[e] = true;
            }
        }
        mask
    }

    /// Whether `E_V` covers every component.
    pub fn is_cover(&self, defense: &PureDefense) -> bool {
        self.monitored(defense).into_iter().all(|b| b)
    }
}

fn index_names(names: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if index.insert(name.clone(), i).is_some() {
            return Err(validation(format!("duplicate {what} identifier {name:?}")));
        }
    }
    Ok(index)
}

/// A set of at most `budget` nodes carrying sensors. Stored sorted and
/// deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PureDefense(Vec<usize>);

impl PureDefense {
    pub fn new(nodes: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = nodes.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        PureDefense(v)
    }

    pub fn empty() -> Self {
        PureDefense(Vec::new())
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }
}

/// Operator mixed strategy, stored sparsely over its support.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDefense {
    support: Vec<(PureDefense, f64)>,
}

impl MixedDefense {
    pub fn new(support: Vec<(PureDefense, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(validation("mixed defense needs a nonempty support"));
        }
        let mut seen = HashSet::with_capacity(support.len());
        let mut total = 0.0;
        for (v, p) in &support {
            if !(-CONSTRUCTION_TOL..=1.0 + CONSTRUCTION_TOL).contains(p) {
                return Err(validation(format!("probability {p} of placement {:?} is outside [0, 1]", v.nodes())));
            }
            if !seen.insert(v) {
                return Err(validation(format!("placement {:?} appears twice in the support", v.nodes())));
            }
            total += p;
        }
        if (total - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(validation(format!("defense probabilities sum to {total}, not 1")));
        }
        Ok(MixedDefense { support })
    }

    /// Builds a distribution from possibly repeated, possibly unnormalized
    /// weights: duplicates are merged, non-positive entries dropped and the
    /// rest rescaled to sum to one.
    pub fn from_weights(entries: impl IntoIterator<Item = (PureDefense, f64)>) -> Result<Self> {
        let mut merged: Vec<(PureDefense, f64)> = Vec::new();
        let mut position: HashMap<PureDefense, usize> = HashMap::new();
        for (v, p) in entries {
            if !p.is_finite() {
                return Err(validation("non-finite defense weight"));
            }
            if p <= 0.0 {
                continue;
            }
            match position.get(&v) {
                Some(&i) => merged[i].1 += p,
                None => {
                    position.insert(v.clone(), merged.len());
                    merged.push((v, p));
                }
            }
        }
        let total: f64 = merged.iter().map(|(_, p)| p).sum();
        if merged.is_empty() || total <= 0.0 {
            return Err(validation("defense weights have no positive mass"));
        }
        for entry in &mut merged {
            entry.1 /= total;
        }
        MixedDefense::new(merged)
    }

    pub fn pure(defense: PureDefense) -> Self {
        MixedDefense { support: vec![(defense, 1.0)] }
    }

    pub fn support(&self) -> &[(PureDefense, f64)] {
        &self.support
    }

    pub fn probability_of(&self, defense: &PureDefense) -> f64 {
        self.support
            .iter()
            .find(|(v, _)| v == defense)
            .map_or(0.0, |(_, p)| *p)
    }
}

/// Attacker mixed strategy, dense over components.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedAttack {
    probs: Vec<f64>,
}

impl MixedAttack {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(validation("attack distribution is empty"));
        }
        for (e, p) in probs.iter().enumerate() {
            if !(-CONSTRUCTION_TOL..=1.0 + CONSTRUCTION_TOL).contains(p) {
                return Err(validation(format!("attack probability {p} on component {e} is outside [0, 1]")));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(validation(format!("attack probabilities sum to {total}, not 1")));
        }
        Ok(MixedAttack { probs })
    }

    pub fn pure(m: usize, e: usize) -> Result<Self> {
        if e >= m {
            return Err(validation(format!("unknown component index {e}")));
        }
        let mut probs = vec![0.0; m];
        probs[e] = 1.0;
        Ok(MixedAttack { probs })
    }

    /// Uniform over `targets` (duplicates ignored).
    pub fn uniform(m: usize, targets: &[usize]) -> Result<Self> {
        let set: HashSet<usize> = targets.iter().copied().collect();
        if set.is_empty() {
            return Err(validation("uniform attack needs at least one target"));
        }
        if let Some(&bad) = set.iter().find(|&&e| e >= m) {
            return Err(validation(format!("unknown component index {bad}")));
        }
        let p = 1.0 / set.len() as f64;
        let probs = (0..m).map(|e| if set.contains(&e) { p } else { 0.0 }).collect();
        Ok(MixedAttack { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, e: usize) -> f64 {
        self.probs[e]
    }
}

/// Per-node probability of carrying a sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals(pub Vec<f64>);

impl Marginals {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// `l(V, e)`: `w_e` if `e` is outside `E_V`, else 0.
pub fn loss(inst: &Instance, defense: &PureDefense, e: usize) -> Result<f64> {
    inst.check_defense(defense)?;
    inst.check_component(e)?;
    let monitored = defense
        .nodes()
        .iter()
        .any(|&v| inst.monitoring_set(v).binary_search(&e).is_ok());
    Ok(if monitored { 0.0 } else { inst.weight(e) })
}

pub fn marginals(inst: &Instance, sigma1: &MixedDefense) -> Result<Marginals> {
    inst.check_mixed_defense(sigma1)?;
    let mut rho = vec![0.0; inst.n()];
    for (v, p) in sigma1.support() {
        for &node in v.nodes() {
            rho[node] += p;
        }
    }
    Ok(Marginals(rho))
}

/// Probability, per component, that `sigma1` leaves it unmonitored.
pub fn unmonitored_probability(inst: &Instance, sigma1: &MixedDefense) -> Result<Vec<f64>> {
    inst.check_mixed_defense(sigma1)?;
    let mut q = vec![0.0; inst.m()];
    for (v, p) in sigma1.support() {
        for (qe, covered) in q.iter_mut().zip(inst.monitored(v)) {
            if !covered {
                *qe += p;
            }
        }
    }
    Ok(q)
}

/// `L(sigma1, e)`.
pub fn loss_against_component(inst: &Instance, sigma1: &MixedDefense, e: usize) -> Result<f64> {
    inst.check_component(e)?;
    Ok(inst.weight(e) * unmonitored_probability(inst, sigma1)?[e])
}

/// `L(V, sigma2)`.
pub fn loss_of_placement(inst: &Instance, defense: &PureDefense, sigma2: &MixedAttack) -> Result<f64> {
    inst.check_defense(defense)?;
    inst.check_attack(sigma2)?;
    Ok(inst
        .monitored(defense)
        .into_iter()
        .enumerate()
        .filter(|(_, covered)| !covered)
        .map(|(e, _)| sigma2.prob(e) * inst.weight(e))
        .sum())
}

/// `L(sigma1, sigma2)`.
pub fn expected_loss(inst: &Instance, sigma1: &MixedDefense, sigma2: &MixedAttack) -> Result<f64> {
    inst.check_attack(sigma2)?;
    let q = unmonitored_probability(inst, sigma1)?;
    Ok(q.iter()
        .enumerate()
        .map(|(e, qe)| sigma2.prob(e) * inst.weight(e) * qe)
        .sum())
}

/// Attacker's best reply to `sigma1`: the lowest-index component maximizing
/// `L(sigma1, e)`, with that value.
pub fn best_response_attack(inst: &Instance, sigma1: &MixedDefense) -> Result<(usize, f64)> {
    let q = unmonitored_probability(inst, sigma1)?;
    let mut best = (0, inst.weight(0) * q[0]);
    for e in 1..inst.m() {
        let value = inst.weight(e) * q[e];
        if value > best.1 + 1e-12 {
            best = (e, value);
        }
    }
    Ok(best)
}

/// Operator's best reply to `sigma2`: a placement of at most `budget` nodes
/// minimizing `L(V, sigma2)`, found by budgeted maximum coverage.
pub fn best_response_defense(
    inst: &Instance,
    sigma2: &MixedAttack,
    node_limit: usize,
) -> Result<(PureDefense, f64)> {
    inst.check_attack(sigma2)?;
    let gains: Vec<f64> = (0..inst.m()).map(|e| sigma2.prob(e).max(0.0) * inst.weight(e)).collect();
    let coverage = budgeted_coverage(inst, &gains, inst.budget(), node_limit)?;
    let value = loss_of_placement(inst, &coverage.defense, sigma2)?;
    Ok((coverage.defense, value))
}

/// Smallest `eps` for which `(sigma1, sigma2)` is an `eps`-equilibrium.
pub fn epsilon_of_profile(
    inst: &Instance,
    sigma1: &MixedDefense,
    sigma2: &MixedAttack,
    node_limit: usize,
) -> Result<f64> {
    let current = expected_loss(inst, sigma1, sigma2)?;
    let (_, attack_value) = best_response_attack(inst, sigma1)?;
    let (_, defense_value) = best_response_defense(inst, sigma2, node_limit)?;
    Ok((attack_value - current).max(current - defense_value).max(0.0))
}
