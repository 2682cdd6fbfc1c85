#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sensorgame::netio::{generate, GeneratorKind, GeneratorParams};
use sensorgame::Instance;

/// Builds an instance from an incidence matrix, giving every uncovered
/// component to node `e % n` and every empty node component `v % m`.
pub fn from_incidence(incidence: &[Vec<bool>], weights: Vec<f64>, budget: usize) -> Instance {
    let n = incidence.len();
    let m = weights.len();
    let mut sets: Vec<Vec<usize>> = incidence
        .iter()
        .map(|row| (0..m).filter(|&e| row[e]).collect())
        .collect();
    for e in 0..m {
        if !sets.iter().any(|s| s.contains(&e)) {
            sets[e % n].push(e);
        }
    }
    for (v, set) in sets.iter_mut().enumerate() {
        if set.is_empty() {
            set.push(v % m);
        }
    }
    Instance::from_sets(sets, weights, budget.clamp(1, n)).unwrap()
}

/// Instances with up to `max_n` nodes, `max_m` components and budget up
/// to `max_b`.
pub fn arb_instance(max_n: usize, max_m: usize, max_b: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n, 1..=max_m, 1..=max_b).prop_flat_map(|(n, m, b)| {
        (
            prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.35), m), n),
            prop::collection::vec(0.05f64..=1.0, m),
        )
            .prop_map(move |(inc, w)| from_incidence(&inc, w, b))
    })
}

/// Instances with mutually disjoint monitoring sets.
pub fn arb_disjoint(max_n: usize, max_m: usize, max_b: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n, 0..=max_m, 1..=max_b, any::<u64>()).prop_map(move |(n, extra, b, seed)| {
        let m = (n + extra).min(max_m.max(n));
        let params = GeneratorParams { budget: b.min(n), ..GeneratorParams::default() };
        generate(GeneratorKind::Disjoint, n, m, seed, &params).unwrap()
    })
}

pub fn random_disjoint(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize, max_b: usize) -> Instance {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(n..=max_m.max(n));
    let b = rng.gen_range(1..=max_b.min(n));
    let params = GeneratorParams { budget: b, ..GeneratorParams::default() };
    generate(GeneratorKind::Disjoint, n, m, rng.gen(), &params).unwrap()
}

/// Random overlapping instance; `w_lo = 1` gives equal weights.
pub fn random_overlapping(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize, max_b: usize, w_lo: f64) -> Instance {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let b = rng.gen_range(1..=max_b.min(n));
    let density = rng.gen_range(0.15..0.5);
    let params = GeneratorParams { budget: b, density, w_lo, ..GeneratorParams::default() };
    generate(GeneratorKind::RandomBipartite, n, m, rng.gen(), &params).unwrap()
}
