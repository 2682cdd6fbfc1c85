//! Set covers, set packings, budgeted coverage and flow-derived monitoring
//! sets.

use std::collections::VecDeque;

use crate::error::{validation, Error, Result};
use crate::game::{Instance, PureDefense};
use crate::lp::{BinaryProgram, BinaryStatus, BranchAndBound, Relation, Sense, DEFAULT_NODE_LIMIT};

/// Directed graph whose edges follow the flow direction.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph {
    vertices: Vec<String>,
    edges: Vec<(usize, usize)>,
}

impl FlowGraph {
    pub fn new(vertices: Vec<String>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for v in &vertices {
            if !seen.insert(v) {
                return Err(validation(format!("duplicate vertex identifier {v:?}")));
            }
        }
        for &(a, b) in &edges {
            if a >= vertices.len() || b >= vertices.len() {
                return Err(validation(format!("edge ({a}, {b}) references an unknown vertex")));
            }
            if a == b {
                return Err(validation(format!("self-loop on vertex {:?}", vertices[a])));
            }
        }
        Ok(FlowGraph { vertices, edges })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// `E_v` for every vertex: `e` belongs to `E_v` when `v` is reachable from
/// `e` along directed edges. A vertex monitors itself.
pub fn monitoring_sets_from_flow(graph: &FlowGraph) -> Vec<Vec<usize>> {
    let n = graph.vertices.len();
    let mut out = vec![Vec::new(); n];
    for &(a, b) in &graph.edges {
        out[a].push(b);
    }
    let mut sets = vec![Vec::new(); n];
    let mut seen = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for source in 0..n {
        seen[source] = source;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            sets[v].push(source);
            for &w in &out[v] {
                if seen[w] != source {
                    seen[w] = source;
                    queue.push_back(w);
                }
            }
        }
    }
    sets
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverConfig {
    pub node_limit: usize,
    /// Accept a greedy answer (flagged inexact) when the node limit is hit.
    pub greedy_fallback: bool,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig { node_limit: DEFAULT_NODE_LIMIT, greedy_fallback: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverResult {
    pub nodes: PureDefense,
    /// `true` when branch-and-bound proved minimality.
    pub exact: bool,
}

impl CoverResult {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingResult {
    pub components: Vec<usize>,
    pub exact: bool,
}

impl PackingResult {
    pub fn size(&self) -> usize {
        self.components.len()
    }
}

fn target_components(inst: &Instance, restrict: Option<&[usize]>) -> Result<Vec<usize>> {
    match restrict {
        None => Ok((0..inst.m()).collect()),
        Some(list) => {
            let mut list = list.to_vec();
            list.sort_unstable();
            list.dedup();
            if let Some(&bad) = list.iter().find(|&&e| e >= inst.m()) {
                return Err(validation(format!("unknown component index {bad}")));
            }
            Ok(list)
        }
    }
}

/// Whether `nodes` monitor every component of `targets`.
pub fn covers(inst: &Instance, nodes: &PureDefense, targets: &[usize]) -> bool {
    let mask = inst.monitored(nodes);
    targets.iter().all(|&e| mask[e])
}

/// Whether every monitoring set meets `components` at most once.
pub fn is_packing(inst: &Instance, components: &[usize]) -> bool {
    let mut chosen = vec![false; inst.m()];
    for &e in components {
        chosen[e] = true;
    }
    inst.monitoring_sets()
        .iter()
        .all(|set| set.iter().filter(|&&e| chosen[e]).count() <= 1)
}

/// Repeatedly takes the node covering the most uncovered targets (lowest
/// index on ties).
pub fn greedy_set_cover(inst: &Instance, restrict: Option<&[usize]>) -> Result<CoverResult> {
    let targets = target_components(inst, restrict)?;
    let mut uncovered = vec![false; inst.m()];
    for &e in &targets {
        uncovered[e] = true;
    }
    let mut left = targets.len();
    let mut chosen = Vec::new();
    while left > 0 {
        let (v, gain) = (0..inst.n())
            .map(|v| (v, inst.monitoring_set(v).iter().filter(|&&e| uncovered[e]).count()))
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        debug_assert!(gain > 0, "instance guarantees every component is coverable");
        for &e in inst.monitoring_set(v) {
            if uncovered[e] {
                uncovered[e] = false;
                left -= 1;
            }
        }
        chosen.push(v);
    }
    Ok(CoverResult { nodes: PureDefense::new(chosen), exact: false })
}

/// Scans targets by ascending number of covering nodes (then index) and
/// keeps each one compatible with those kept so far.
pub fn greedy_set_packing(inst: &Instance, restrict: Option<&[usize]>) -> Result<PackingResult> {
    let mut targets = target_components(inst, restrict)?;
    targets.sort_by_key(|&e| (inst.covered_by(e).len(), e));
    let mut blocked = vec![false; inst.n()];
    let mut chosen = Vec::new();
    for e in targets {
        if inst.covered_by(e).iter().any(|&v| blocked[v]) {
            continue;
        }
        for &v in inst.covered_by(e) {
            blocked[v] = true;
        }
        chosen.push(e);
    }
    chosen.sort_unstable();
    Ok(PackingResult { components: chosen, exact: false })
}

fn limit_error(what: &str, limit: usize, bound: f64, incumbent: Option<f64>) -> Error {
    Error::Resource {
        what: what.to_string(),
        limit,
        bound: Some(bound),
        incumbent,
    }
}

/// Minimum set cover of `restrict` (all components when `None`).
pub fn min_set_cover(inst: &Instance, restrict: Option<&[usize]>, config: &CoverConfig) -> Result<CoverResult> {
    let targets = target_components(inst, restrict)?;
    let n = inst.n();
    let mut bp = BinaryProgram::new(Sense::Minimize, vec![1.0; n]);
    for &e in &targets {
        let mut row = vec![0.0; n];
        for &v in inst.covered_by(e) {
            row[v] = 1.0;
        }
        bp.add_constraint(row, Relation::Ge, 1.0);
    }
    let greedy = greedy_set_cover(inst, Some(&targets))?;
    let start: Vec<bool> = (0..n).map(|v| greedy.nodes.contains(v)).collect();
    let sol = BranchAndBound { node_limit: config.node_limit, incumbent: Some(start) }.solve(&bp)?;
    match sol.status {
        BinaryStatus::Optimal => {
            let assignment = sol.assignment.expect("optimal solution carries an assignment");
            let nodes = PureDefense::new((0..n).filter(|&v| assignment[v]));
            Ok(CoverResult { nodes, exact: true })
        }
        BinaryStatus::NodeLimit if config.greedy_fallback => {
            // the incumbent is never worse than the greedy start
            let assignment = sol.assignment.expect("incumbent seeded from greedy");
            let nodes = PureDefense::new((0..n).filter(|&v| assignment[v]));
            Ok(CoverResult { nodes, exact: false })
        }
        BinaryStatus::NodeLimit => Err(limit_error("set cover search", config.node_limit, sol.bound, sol.objective)),
        BinaryStatus::Infeasible => Err(Error::Solver("set cover program reported infeasible".into())),
    }
}

/// Maximum set packing of `restrict` (all components when `None`).
pub fn max_set_packing(
    inst: &Instance,
    restrict: Option<&[usize]>,
    config: &CoverConfig,
) -> Result<PackingResult> {
    let targets = target_components(inst, restrict)?;
    let k = targets.len();
    if k == 0 {
        return Ok(PackingResult { components: Vec::new(), exact: true });
    }
    let mut column = vec![usize::MAX; inst.m()];
    for (j, &e) in targets.iter().enumerate() {
        column[e] = j;
    }
    let mut bp = BinaryProgram::new(Sense::Maximize, vec![1.0; k]);
    for v in 0..inst.n() {
        let members: Vec<usize> = inst
            .monitoring_set(v)
            .iter()
            .filter(|&&e| column[e] != usize::MAX)
            .map(|&e| column[e])
            .collect();
        if members.len() < 2 {
            continue;
        }
        let mut row = vec![0.0; k];
        for j in members {
            row[j] = 1.0;
        }
        bp.add_constraint(row, Relation::Le, 1.0);
    }
    let greedy = greedy_set_packing(inst, Some(&targets))?;
    let start: Vec<bool> = targets.iter().map(|e| greedy.components.contains(e)).collect();
    let sol = BranchAndBound { node_limit: config.node_limit, incumbent: Some(start) }.solve(&bp)?;
    let pick = |assignment: Vec<bool>| -> Vec<usize> {
        targets.iter().zip(assignment).filter(|(_, on)| *on).map(|(&e, _)| e).collect()
    };
    match sol.status {
        BinaryStatus::Optimal => Ok(PackingResult {
            components: pick(sol.assignment.expect("optimal solution carries an assignment")),
            exact: true,
        }),
        BinaryStatus::NodeLimit if config.greedy_fallback => Ok(PackingResult {
            components: pick(sol.assignment.expect("incumbent seeded from greedy")),
            exact: false,
        }),
        BinaryStatus::NodeLimit => Err(limit_error("set packing search", config.node_limit, sol.bound, sol.objective)),
        BinaryStatus::Infeasible => Err(Error::Solver("set packing program reported infeasible".into())),
    }
}

/// A minimum set cover that fits the budget, if one exists. Such a cover
/// played against any attack is a pure equilibrium with value 0.
pub fn pure_ne_if_cover(inst: &Instance, config: &CoverConfig) -> Result<Option<PureDefense>> {
    let cover = min_set_cover(inst, None, config)?;
    Ok((cover.size() <= inst.budget()).then_some(cover.nodes))
}

/// Outcome of a budgeted maximum coverage solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub defense: PureDefense,
    /// Total gain of the components `defense` leaves uncovered.
    pub uncovered: f64,
}

const GAIN_TOL: f64 = 1e-14;

/// Chooses at most `budget` nodes minimizing the total `gains` of
/// components left unmonitored.
///
/// Components with zero gain and nodes whose gain-carrying coverage is
/// contained in another node's are left out of the binary program; neither
/// can change its optimum.
pub fn budgeted_coverage(inst: &Instance, gains: &[f64], budget: usize, node_limit: usize) -> Result<Coverage> {
    if gains.len() != inst.m() {
        return Err(validation(format!("{} gains given for {} components", gains.len(), inst.m())));
    }
    if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(validation("component gains must be finite and non-negative"));
    }
    let relevant: Vec<usize> = (0..inst.m()).filter(|&e| gains[e] > GAIN_TOL).collect();
    let mut slot = vec![usize::MAX; inst.m()];
    for (k, &e) in relevant.iter().enumerate() {
        slot[e] = k;
    }
    let words = relevant.len().div_ceil(64);
    let masks: Vec<Vec<u64>> = (0..inst.n())
        .map(|v| {
            let mut mask = vec![0u64; words];
            for &e in inst.monitoring_set(v) {
                if slot[e] != usize::MAX {
                    mask[slot[e] / 64] |= 1 << (slot[e] % 64);
                }
            }
            mask
        })
        .collect();
    let subset = |a: &[u64], b: &[u64]| a.iter().zip(b).all(|(x, y)| x & !y == 0);
    let candidates: Vec<usize> = (0..inst.n())
        .filter(|&u| masks[u].iter().any(|w| *w != 0))
        .filter(|&u| {
            !(0..inst.n()).any(|v| {
                v != u && subset(&masks[u], &masks[v]) && (v < u || !subset(&masks[v], &masks[u]))
            })
        })
        .collect();

    let uncovered_by = |chosen: &[usize]| -> f64 {
        let mut covered = vec![0u64; words];
        for &v in chosen {
            for (c, m) in covered.iter_mut().zip(&masks[v]) {
                *c |= m;
            }
        }
        relevant
            .iter()
            .enumerate()
            .filter(|(k, _)| covered[k / 64] >> (k % 64) & 1 == 0)
            .map(|(_, &e)| gains[e])
            .sum()
    };

    if candidates.len() <= budget {
        let uncovered = uncovered_by(&candidates);
        return Ok(Coverage { defense: PureDefense::new(candidates), uncovered });
    }

    // x_v for candidates, then y_e for relevant components
    let c = candidates.len();
    let r = relevant.len();
    let mut objective = vec![0.0; c + r];
    for (k, &e) in relevant.iter().enumerate() {
        objective[c + k] = gains[e];
    }
    let mut bp = BinaryProgram::new(Sense::Minimize, objective);
    for (k, &e) in relevant.iter().enumerate() {
        let mut row = vec![0.0; c + r];
        for (j, &v) in candidates.iter().enumerate() {
            if inst.monitoring_set(v).binary_search(&e).is_ok() {
                row[j] = 1.0;
            }
        }
        row[c + k] = 1.0;
        bp.add_constraint(row, Relation::Ge, 1.0);
    }
    let mut row = vec![0.0; c + r];
    row[..c].fill(1.0);
    bp.add_constraint(row, Relation::Le, budget as f64);

    let start = greedy_coverage(&masks, &candidates, gains, &relevant, budget);
    let mut incumbent = vec![false; c + r];
    let mut covered = vec![0u64; words];
    for &j in &start {
        incumbent[j] = true;
        for (w, m) in covered.iter_mut().zip(&masks[candidates[j]]) {
            *w |= m;
        }
    }
    for k in 0..r {
        incumbent[c + k] = covered[k / 64] >> (k % 64) & 1 == 0;
    }

    let sol = BranchAndBound { node_limit, incumbent: Some(incumbent) }.solve(&bp)?;
    match sol.status {
        BinaryStatus::Optimal => {
            let assignment = sol.assignment.expect("optimal solution carries an assignment");
            let chosen: Vec<usize> = (0..c).filter(|&j| assignment[j]).map(|j| candidates[j]).collect();
            let uncovered = uncovered_by(&chosen);
            Ok(Coverage { defense: PureDefense::new(chosen), uncovered })
        }
        BinaryStatus::NodeLimit => Err(limit_error("budgeted coverage search", node_limit, sol.bound, sol.objective)),
        BinaryStatus::Infeasible => Err(Error::Solver("budgeted coverage program reported infeasible".into())),
    }
}

/// Greedy by marginal gain; returns candidate positions.
fn greedy_coverage(masks: &[Vec<u64>], candidates: &[usize], gains: &[f64], relevant: &[usize], budget: usize) -> Vec<usize> {
    let words = masks.first().map_or(0, Vec::len);
    let mut covered = vec![0u64; words];
    let mut chosen = Vec::new();
    for _ in 0..budget {
        let mut best: Option<(usize, f64)> = None;
        for (j, &v) in candidates.iter().enumerate() {
            if chosen.contains(&j) {
                continue;
            }
            let gain: f64 = relevant
                .iter()
                .enumerate()
                .filter(|(k, _)| masks[v][k / 64] >> (k % 64) & 1 == 1 && covered[k / 64] >> (k % 64) & 1 == 0)
                .map(|(_, &e)| gains[e])
                .sum();
            if gain > 0.0 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((j, gain));
            }
        }
        let Some((j, _)) = best else { break };
        for (w, m) in covered.iter_mut().zip(&masks[candidates[j]]) {
            *w |= m;
        }
        chosen.push(j);
    }
    chosen
}
