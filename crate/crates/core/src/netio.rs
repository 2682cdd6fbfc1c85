//! Instance documents, random instance generators and experiment records.
//!
//! A document is a JSON object in one of two forms. The explicit form lists
//! `nodes`, `components`, `monitoring_sets` (node name to component names),
//! `weights` (component name to criticality) and `budget`. The graph form
//! lists `vertices`, directed `edges` along the flow, `weights` and
//! `budget`; monitoring sets are then the reachability sets of the graph.
//! Serialization is canonical: keys are sorted and lists keep instance
//! order.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cover::{monitoring_sets_from_flow, FlowGraph};
use crate::error::{validation, Error, Result};
use crate::game::Instance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitDocument {
    pub budget: usize,
    pub components: Vec<String>,
    pub monitoring_sets: BTreeMap<String, Vec<String>>,
    pub nodes: Vec<String>,
    pub weights: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub budget: usize,
    pub edges: Vec<(String, String)>,
    pub vertices: Vec<String>,
    pub weights: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceDocument {
    Explicit(ExplicitDocument),
    Graph(GraphDocument),
}

fn schema_error(form: &str, err: serde_json::Error) -> Error {
    validation(format!("{form} instance document: {err}"))
}

impl InstanceDocument {
    /// Parses a document, choosing the graph form when a `vertices` key is
    /// present.
    pub fn from_json(text: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(text).map_err(|e| schema_error("malformed", e))?;
        let Some(object) = probe.as_object() else {
            return Err(validation("instance document must be a JSON object"));
        };
        if object.contains_key("vertices") || object.contains_key("edges") {
            serde_json::from_str(text).map(InstanceDocument::Graph).map_err(|e| schema_error("graph", e))
        } else {
            serde_json::from_str(text).map(InstanceDocument::Explicit).map_err(|e| schema_error("explicit", e))
        }
    }

    pub fn to_json(&self) -> String {
        let text = match self {
            InstanceDocument::Explicit(doc) => serde_json::to_string_pretty(doc),
            InstanceDocument::Graph(doc) => serde_json::to_string_pretty(doc),
        };
        text.expect("documents hold only strings, integers and finite numbers") + "\n"
    }

    pub fn to_instance(&self) -> Result<Instance> {
        match self {
            InstanceDocument::Explicit(doc) => explicit_to_instance(doc),
            InstanceDocument::Graph(doc) => graph_to_instance(doc),
        }
    }
}

fn lookup(index: &BTreeMap<&str, usize>, name: &str, kind: &str, context: &str) -> Result<usize> {
    index
        .get(name)
        .copied()
        .ok_or_else(|| validation(format!("{context}: unknown {kind} `{name}`")))
}

fn name_index<'a>(names: &'a [String], kind: &str) -> Result<BTreeMap<&'a str, usize>> {
    let mut index = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        if index.insert(name.as_str(), i).is_some() {
            return Err(validation(format!("duplicate {kind} name `{name}`")));
        }
    }
    Ok(index)
}

fn weight_vector(names: &[String], weights: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    let index = name_index(names, "component")?;
    for name in weights.keys() {
        lookup(&index, name, "component", "weights")?;
    }
    names
        .iter()
        .map(|name| {
            weights
                .get(name)
                .copied()
                .ok_or_else(|| validation(format!("weights: missing entry for component `{name}`")))
        })
        .collect()
}

fn explicit_to_instance(doc: &ExplicitDocument) -> Result<Instance> {
    let nodes = name_index(&doc.nodes, "node")?;
    let components = name_index(&doc.components, "component")?;
    let mut sets = vec![Vec::new(); doc.nodes.len()];
    for (node, members) in &doc.monitoring_sets {
        let v = lookup(&nodes, node, "node", "monitoring_sets")?;
        for name in members {
            sets[v].push(lookup(&components, name, "component", &format!("monitoring_sets.{node}"))?);
        }
    }
    let weights = weight_vector(&doc.components, &doc.weights)?;
    Instance::new(doc.nodes.clone(), doc.components.clone(), sets, weights, doc.budget)
}

fn graph_to_instance(doc: &GraphDocument) -> Result<Instance> {
    let index = name_index(&doc.vertices, "vertex")?;
    let mut edges = Vec::with_capacity(doc.edges.len());
    for (i, (from, to)) in doc.edges.iter().enumerate() {
        let context = format!("edges[{i}]");
        edges.push((lookup(&index, from, "vertex", &context)?, lookup(&index, to, "vertex", &context)?));
    }
    let graph = FlowGraph::new(doc.vertices.clone(), edges)?;
    let sets = monitoring_sets_from_flow(&graph);
    let weights = weight_vector(&doc.vertices, &doc.weights)?;
    Instance::new(doc.vertices.clone(), doc.vertices.clone(), sets, weights, doc.budget)
}

/// Explicit-form document describing `inst`.
pub fn to_document(inst: &Instance) -> InstanceDocument {
    let components = inst.component_names();
    let monitoring_sets = inst
        .node_names()
        .iter()
        .enumerate()
        .map(|(v, name)| {
            let members = inst.monitoring_set(v).iter().map(|&e| components[e].clone()).collect();
            (name.clone(), members)
        })
        .collect();
    let weights = components.iter().cloned().zip(inst.weights().iter().copied()).collect();
    InstanceDocument::Explicit(ExplicitDocument {
        budget: inst.budget(),
        components: components.to_vec(),
        monitoring_sets,
        nodes: inst.node_names().to_vec(),
        weights,
    })
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    InstanceDocument::from_json(text)?.to_instance()
}

pub fn serialize_instance(inst: &Instance) -> String {
    to_document(inst).to_json()
}

/// Family of random instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Components partitioned among nodes.
    Disjoint,
    /// Each node monitors each component independently with probability
    /// `density`.
    RandomBipartite,
    /// Layered flow network; nodes and components are its vertices.
    RandomDag,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disjoint" => Ok(GeneratorKind::Disjoint),
            "random-bipartite" => Ok(GeneratorKind::RandomBipartite),
            "random-dag" => Ok(GeneratorKind::RandomDag),
            other => Err(validation(format!("unknown generator kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub budget: usize,
    /// Criticalities are drawn uniformly from `[w_lo, 1]`.
    pub w_lo: f64,
    pub density: f64,
    /// Number of layers of the flow network.
    pub layers: usize,
    /// Probability of each extra edge between consecutive layers.
    pub extra_edge_prob: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams { budget: 1, w_lo: 0.1, density: 0.3, layers: 8, extra_edge_prob: 0.02 }
    }
}

fn draw_weights(rng: &mut ChaCha8Rng, m: usize, w_lo: f64) -> Vec<f64> {
    (0..m)
        .map(|_| if w_lo >= 1.0 { 1.0 } else { rng.gen_range(w_lo..=1.0) })
        .collect()
}

/// Seed-deterministic random instance. For `RandomDag`, `m` must equal `n`.
pub fn generate(kind: GeneratorKind, n: usize, m: usize, seed: u64, params: &GeneratorParams) -> Result<Instance> {
    if n == 0 || m == 0 {
        return Err(validation("generator sizes must be positive"));
    }
    if !(params.w_lo > 0.0 && params.w_lo <= 1.0) {
        return Err(validation(format!("w_lo must lie in (0, 1], got {}", params.w_lo)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        GeneratorKind::Disjoint => {
            if m < n {
                return Err(validation(format!("disjoint instances need m >= n, got n={n}, m={m}")));
            }
            // every node gets one component, the rest land anywhere
            let mut owner: Vec<usize> = (0..n).collect();
            owner.extend((n..m).map(|_| rng.gen_range(0..n)));
            owner.shuffle(&mut rng);
            let mut sets = vec![Vec::new(); n];
            for (e, &v) in owner.iter().enumerate() {
                sets[v].push(e);
            }
            let weights = draw_weights(&mut rng, m, params.w_lo);
            Instance::from_sets(sets, weights, params.budget)
        }
        GeneratorKind::RandomBipartite => {
            if !(0.0..=1.0).contains(&params.density) {
                return Err(validation(format!("density must lie in [0, 1], got {}", params.density)));
            }
            let mut sets: Vec<Vec<usize>> = (0..n)
                .map(|_| (0..m).filter(|_| rng.gen_bool(params.density)).collect())
                .collect();
            let mut covered = vec![false; m];
            for set in &sets {
                for &e in set {
                    covered[e] = true;
                }
            }
            for e in 0..m {
                if !covered[e] {
                    sets[rng.gen_range(0..n)].push(e);
                }
            }
            for set in sets.iter_mut().filter(|s| s.is_empty()) {
                set.push(rng.gen_range(0..m));
            }
            let weights = draw_weights(&mut rng, m, params.w_lo);
            Instance::from_sets(sets, weights, params.budget)
        }
        GeneratorKind::RandomDag => {
            if m != n {
                return Err(validation(format!("flow networks have m = n, got n={n}, m={m}")));
            }
            let graph = random_flow_graph(&mut rng, n, params)?;
            let sets = monitoring_sets_from_flow(&graph);
            let weights = draw_weights(&mut rng, n, params.w_lo);
            let names = graph.vertices().to_vec();
            Instance::new(names.clone(), names, sets, weights, params.budget)
        }
    }
}

/// Layered DAG: vertices are split into consecutive layers, each vertex
/// past the first layer draws one parent from the previous layer, and
/// every other pair of consecutive-layer vertices is joined with
/// probability `extra_edge_prob`.
pub fn random_flow_graph(rng: &mut ChaCha8Rng, n: usize, params: &GeneratorParams) -> Result<FlowGraph> {
    if params.layers == 0 {
        return Err(validation("layer count must be positive"));
    }
    if !(0.0..=1.0).contains(&params.extra_edge_prob) {
        return Err(validation("extra edge probability must lie in [0, 1]"));
    }
    let layers = params.layers.min(n);
    let bounds: Vec<usize> = (0..=layers).map(|l| l * n / layers).collect();
    let mut edges = Vec::new();
    for l in 1..layers {
        let prev = bounds[l - 1]..bounds[l];
        for child in bounds[l]..bounds[l + 1] {
            let parent = rng.gen_range(prev.clone());
            edges.push((parent, child));
            for other in prev.clone() {
                if other != parent && rng.gen_bool(params.extra_edge_prob) {
                    edges.push((other, child));
                }
            }
        }
    }
    edges.sort_unstable();
    let names = (1..=n).map(|i| format!("x{i}")).collect();
    FlowGraph::new(names, edges)
}

/// One row of the experiment CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub instance_id: String,
    pub n: usize,
    pub m: usize,
    pub b1: usize,
    pub solver: String,
    pub value: f64,
    pub eps: f64,
    pub iters: usize,
    pub seconds: f64,
}

/// Column order of the experiment CSV.
pub const RECORD_COLUMNS: [&str; 9] = ["instance_id", "n", "m", "b1", "solver", "value", "eps", "iters", "seconds"];

impl ExperimentRecord {
    pub fn validate(&self) -> Result<()> {
        if [self.value, self.eps, self.seconds].iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(validation(format!("record for {} has non-finite fields", self.instance_id)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::is_disjoint;

    const FOUR_NODE: &str = r#"{
        "budget": 1,
        "components": ["e1", "e2", "e3", "e4", "e5", "e6", "e7"],
        "monitoring_sets": {
            "v1": ["e1", "e2"],
            "v2": ["e2", "e3"],
            "v3": ["e3", "e4", "e5", "e6", "e7"],
            "v4": ["e5"]
        },
        "nodes": ["v1", "v2", "v3", "v4"],
        "weights": {"e1": 0.9, "e2": 1, "e3": 1, "e4": 1, "e5": 1, "e6": 1, "e7": 0.5}
    }"#;

    #[test]
    fn parses_explicit_sets() {
        let inst = parse_instance(FOUR_NODE).unwrap();
        assert_eq!(inst.n(), 4);
        assert_eq!(inst.monitoring_set(2), &[2, 3, 4, 5, 6]);
        assert_eq!(inst.weight(0), 0.9);
    }

    #[test]
    fn parses_graph_form() {
        let doc = r#"{"budget": 1, "vertices": ["a", "b", "c"], "edges": [["a", "b"], ["b", "c"]],
                      "weights": {"a": 1, "b": 0.5, "c": 0.25}}"#;
        let inst = parse_instance(doc).unwrap();
        assert_eq!(inst.monitoring_sets(), &[vec![0], vec![0, 1], vec![0, 1, 2]]);
    }

    #[test]
    fn rejects_zero_weight_and_bad_names() {
        let zero = FOUR_NODE.replace("\"e7\": 0.5", "\"e7\": 0");
        assert!(matches!(parse_instance(&zero), Err(Error::Validation(_))));
        let unknown = FOUR_NODE.replace("\"v4\": [\"e5\"]", "\"v4\": [\"e9\"]");
        let err = parse_instance(&unknown).unwrap_err().to_string();
        assert!(err.contains("monitoring_sets.v4") && err.contains("e9"), "{err}");
        let missing = FOUR_NODE.replace("\"budget\": 1,", "");
        let err = parse_instance(&missing).unwrap_err().to_string();
        assert!(err.contains("budget") && err.contains("line"), "{err}");
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let inst = parse_instance(FOUR_NODE).unwrap();
        let text = serialize_instance(&inst);
        let back = parse_instance(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn disjoint_generator() {
        let params = GeneratorParams { budget: 2, ..GeneratorParams::default() };
        let inst = generate(GeneratorKind::Disjoint, 5, 10, 7, &params).unwrap();
        assert!(is_disjoint(&inst));
        assert_eq!((inst.n(), inst.m()), (5, 10));
        assert!(inst.weights().iter().all(|&w| (0.1..=1.0).contains(&w)));
    }

    #[test]
    fn bipartite_generator_covers_everything() {
        let params = GeneratorParams { density: 0.05, ..GeneratorParams::default() };
        let inst = generate(GeneratorKind::RandomBipartite, 6, 30, 1, &params).unwrap();
        assert!((0..30).all(|e| !inst.covered_by(e).is_empty()));
    }

    #[test]
    fn dag_generator_uses_reachability() {
        let params = GeneratorParams::default();
        let inst = generate(GeneratorKind::RandomDag, 200, 200, 3, &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let graph = random_flow_graph(&mut rng, 200, &params).unwrap();
        assert_eq!(inst.monitoring_sets(), monitoring_sets_from_flow(&graph).as_slice());
        assert!(graph.edges().iter().all(|&(a, b)| a < b));
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let params = GeneratorParams::default();
        for kind in [GeneratorKind::Disjoint, GeneratorKind::RandomBipartite, GeneratorKind::RandomDag] {
            let a = serialize_instance(&generate(kind, 12, 12, 5, &params).unwrap());
            let b = serialize_instance(&generate(kind, 12, 12, 5, &params).unwrap());
            let c = serialize_instance(&generate(kind, 12, 12, 6, &params).unwrap());
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn generator_rejects_infeasible_params() {
        let params = GeneratorParams::default();
        assert!(generate(GeneratorKind::Disjoint, 5, 3, 0, &params).is_err());
        assert!(generate(GeneratorKind::RandomDag, 5, 6, 0, &params).is_err());
        let bad = GeneratorParams { w_lo: 0.0, ..params };
        assert!(generate(GeneratorKind::Disjoint, 2, 2, 0, &bad).is_err());
    }
}
