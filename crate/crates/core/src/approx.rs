//! Approximate equilibria built from set covers and set packings, their
//! epsilon certificates, and the decomposition of sensor marginals into a
//! mixed placement.

use crate::cover::{is_packing, min_set_cover, max_set_packing, covers, CoverConfig, CoverResult, PackingResult};
use crate::error::{contract, validation, Result};
use crate::game::{Instance, Marginals, MixedAttack, MixedDefense, PureDefense, CONSTRUCTION_TOL};

// breakpoints closer than this are merged
const SNAP: f64 = 1e-12;

/// Realizes per-node sensor probabilities `rho` as a distribution over
/// placements of at most `budget` nodes.
///
/// Node masses are laid end to end on `[0, budget)`, padded with an idle
/// mass up to `budget`, and read through a comb of `budget` teeth spaced one
/// apart; each offset of the comb selects at most one point per unit strip.
/// The support has at most `n + 1` placements.
pub fn decompose_marginals(rho: &Marginals, budget: usize) -> Result<MixedDefense> {
    let values = rho.values();
    if budget == 0 {
        return Err(validation("budget must be positive"));
    }
    let mut total = 0.0;
    for (v, &r) in values.iter().enumerate() {
        if !r.is_finite() || !(-CONSTRUCTION_TOL..=1.0 + CONSTRUCTION_TOL).contains(&r) {
            return Err(validation(format!("marginal {r} of node {v} is outside [0, 1]")));
        }
        total += r.clamp(0.0, 1.0);
    }
    if total > budget as f64 + CONSTRUCTION_TOL {
        return Err(validation(format!("marginals sum to {total}, above the budget {budget}")));
    }
    let scale = if total > budget as f64 { budget as f64 / total } else { 1.0 };

    // interval [start, end) per node with positive mass
    let mut intervals = Vec::new();
    let mut cursor = 0.0f64;
    for (v, &r) in values.iter().enumerate() {
        let r = r.clamp(0.0, 1.0) * scale;
        if r <= 0.0 {
            continue;
        }
        intervals.push((v, cursor, cursor + r));
        cursor += r;
    }

    let mut cuts: Vec<f64> = vec![0.0, 1.0, cursor - cursor.floor()];
    for &(_, start, _) in &intervals {
        cuts.push(start - start.floor());
    }
    cuts.sort_by(f64::total_cmp);
    let mut breaks: Vec<f64> = Vec::with_capacity(cuts.len());
    for c in cuts {
        match breaks.last() {
            Some(&last) if c - last <= SNAP => {}
            _ => breaks.push(c),
        }
    }
    if let Some(last) = breaks.last_mut() {
        *last = 1.0;
    }

    let mut entries = Vec::with_capacity(breaks.len());
    for pair in breaks.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let theta = 0.5 * (lo + hi);
        let chosen = intervals.iter().filter(|&&(_, start, end)| {
            // smallest comb point at or after start
            let k = (start - theta).ceil();
            let point = theta + k;
            point < end
        });
        entries.push((PureDefense::new(chosen.map(|&(v, _, _)| v)), hi - lo));
    }
    let sigma = MixedDefense::from_weights(entries)?;
    debug_assert!(sigma.support().iter().all(|(v, _)| v.len() <= budget));
    Ok(sigma)
}

/// Bounds attached to an approximate equilibrium.
///
/// The defense never loses more than `worst_case_loss` and the attack
/// always secures at least `payoff_floor`, so the profile is an
/// `eps`-equilibrium with `eps = worst_case_loss - payoff_floor`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonCertificate {
    pub eps1: f64,
    pub eps2: f64,
    pub eps: f64,
    pub worst_case_loss: f64,
    pub payoff_floor: f64,
    /// Set when the cover or packing size was not proved optimal.
    pub heuristic: bool,
}

impl EpsilonCertificate {
    /// Certificate of the full cover/packing profile.
    ///
    /// `cover_size` and `packing_size` are the minimum cover and maximum
    /// packing sizes, `w_min`/`w_max` the extreme criticalities.
    pub fn cover_packing(
        budget: usize,
        cover_size: usize,
        packing_size: usize,
        w_min: f64,
        w_max: f64,
        heuristic: bool,
    ) -> Self {
        let b = budget as f64;
        let n = cover_size as f64;
        let m = packing_size as f64;
        let big = b.max(m);
        let eps1 = b * w_min * (n - big) / (n * big);
        let eps2 = (w_max - w_min) * (n - b) / n;
        EpsilonCertificate {
            eps1,
            eps2,
            eps: eps1 + eps2,
            worst_case_loss: w_max * (n - b) / n,
            payoff_floor: w_min * (m - b).max(0.0) / m,
            heuristic,
        }
    }

    /// Certificate of the profile focused on one criticality class at
    /// level `w_top`.
    pub fn focused(budget: usize, cover_size: usize, packing_size: usize, w_top: f64, heuristic: bool) -> Self {
        let b = budget as f64;
        let n = cover_size as f64;
        let m = packing_size as f64;
        let big = b.max(m);
        let eps1 = b * w_top * (n - big) / (n * big);
        EpsilonCertificate {
            eps1,
            eps2: 0.0,
            eps: eps1,
            worst_case_loss: w_top * (n - b) / n,
            payoff_floor: w_top * (m - b).max(0.0) / m,
            heuristic,
        }
    }
}

/// A defense, an attack and the certificate bounding their gap.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxProfile {
    pub defense: MixedDefense,
    pub attack: MixedAttack,
    pub certificate: EpsilonCertificate,
    pub cover: CoverResult,
    pub packing: PackingResult,
}

fn spread_over(inst: &Instance, nodes: &PureDefense) -> Result<MixedDefense> {
    let share = inst.budget() as f64 / nodes.len() as f64;
    let rho = (0..inst.n()).map(|v| if nodes.contains(v) { share } else { 0.0 }).collect();
    decompose_marginals(&Marginals(rho), inst.budget())
}

/// Defense spreading the budget evenly over a minimum cover, attack
/// uniform over a maximum packing.
pub fn cover_packing_profile(inst: &Instance, cover: &CoverResult, packing: &PackingResult) -> Result<ApproxProfile> {
    inst.check_nodes(&cover.nodes)?;
    let all: Vec<usize> = (0..inst.m()).collect();
    if !covers(inst, &cover.nodes, &all) {
        return Err(validation("node set is not a set cover"));
    }
    for &e in &packing.components {
        inst.check_component(e)?;
    }
    if packing.components.is_empty() || !is_packing(inst, &packing.components) {
        return Err(validation("component set is not a nonempty set packing"));
    }
    if inst.budget() >= cover.size() {
        return Err(contract(format!(
            "a cover of {} nodes fits the budget {}; play it as a pure equilibrium instead",
            cover.size(),
            inst.budget()
        )));
    }
    let defense = spread_over(inst, &cover.nodes)?;
    let attack = MixedAttack::uniform(inst.m(), &packing.components)?;
    let certificate = EpsilonCertificate::cover_packing(
        inst.budget(),
        cover.size(),
        packing.size(),
        inst.w_min(),
        inst.w_max(),
        !(cover.exact && packing.exact),
    );
    Ok(ApproxProfile { defense, attack, certificate, cover: cover.clone(), packing: packing.clone() })
}

/// Computes a minimum cover and maximum packing, then the profile.
pub fn solve_cover_packing(inst: &Instance, config: &CoverConfig) -> Result<ApproxProfile> {
    let cover = min_set_cover(inst, None, config)?;
    let packing = max_set_packing(inst, None, config)?;
    cover_packing_profile(inst, &cover, &packing)
}

/// Components at the largest criticality.
pub fn top_class(inst: &Instance) -> Vec<usize> {
    let top = inst.w_max();
    (0..inst.m()).filter(|&e| inst.weight(e) >= top).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum FocusedOutcome {
    Profile(ApproxProfile),
    /// The criticality gap is too small for the focused bound to hold.
    ConditionFails {
        /// Criticality of the focus class minus the largest one outside it.
        gap: f64,
        /// Gap the bound needs: top criticality times budget over cover size.
        required: f64,
    },
}

impl FocusedOutcome {
    pub fn profile(&self) -> Option<&ApproxProfile> {
        match self {
            FocusedOutcome::Profile(p) => Some(p),
            FocusedOutcome::ConditionFails { .. } => None,
        }
    }
}

/// Cover/packing profile restricted to a class of equally critical
/// components (the top class when `focus` is `None`).
pub fn focused_profile(inst: &Instance, focus: Option<&[usize]>, config: &CoverConfig) -> Result<FocusedOutcome> {
    let mut focus: Vec<usize> = match focus {
        Some(list) => list.to_vec(),
        None => top_class(inst),
    };
    focus.sort_unstable();
    focus.dedup();
    if focus.is_empty() {
        return Err(validation("focus class is empty"));
    }
    for &e in &focus {
        inst.check_component(e)?;
    }
    let w_top = inst.weight(focus[0]);
    if focus.iter().any(|&e| (inst.weight(e) - w_top).abs() > CONSTRUCTION_TOL) {
        return Err(contract("focus components must share one criticality"));
    }
    let mut inside = vec![false; inst.m()];
    for &e in &focus {
        inside[e] = true;
    }
    let w_rest = (0..inst.m()).filter(|&e| !inside[e]).map(|e| inst.weight(e)).fold(0.0, f64::max);

    let cover = min_set_cover(inst, Some(&focus), config)?;
    let gap = w_top - w_rest;
    let required = w_top * inst.budget() as f64 / cover.size() as f64;
    if gap < required - CONSTRUCTION_TOL {
        return Ok(FocusedOutcome::ConditionFails { gap, required });
    }
    let packing = max_set_packing(inst, Some(&focus), config)?;
    let defense = spread_over(inst, &cover.nodes)?;
    let attack = MixedAttack::uniform(inst.m(), &packing.components)?;
    let certificate = EpsilonCertificate::focused(
        inst.budget(),
        cover.size(),
        packing.size(),
        w_top,
        !(cover.exact && packing.exact),
    );
    Ok(FocusedOutcome::Profile(ApproxProfile { defense, attack, certificate, cover, packing }))
}

/// Side-by-side view of the full and focused certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateComparison {
    pub full_worst_case: f64,
    pub focused_worst_case: f64,
    pub full_eps: f64,
    pub focused_eps: f64,
    /// Whether the focused worst-case loss is no larger than the full one.
    pub worst_case_improved: bool,
    pub focused_eps_smaller: bool,
}

pub fn certificate_improvement(full: &EpsilonCertificate, focused: &EpsilonCertificate) -> CertificateComparison {
    CertificateComparison {
        full_worst_case: full.worst_case_loss,
        focused_worst_case: focused.worst_case_loss,
        full_eps: full.eps,
        focused_eps: focused.eps,
        worst_case_improved: focused.worst_case_loss <= full.worst_case_loss + CONSTRUCTION_TOL,
        focused_eps_smaller: focused.eps < full.eps - CONSTRUCTION_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::three_component;
    use crate::game::{best_response_attack, best_response_defense, epsilon_of_profile, marginals};
    use crate::lp::DEFAULT_NODE_LIMIT;

    fn support_of(sigma: &MixedDefense) -> Vec<(Vec<usize>, f64)> {
        let mut s: Vec<_> = sigma.support().iter().map(|(v, p)| (v.nodes().to_vec(), *p)).collect();
        s.sort_by(|a, b| a.0.cmp(&b.0));
        s
    }

    fn assert_support(sigma: &MixedDefense, want: &[(&[usize], f64)]) {
        let got = support_of(sigma);
        assert_eq!(got.len(), want.len(), "{got:?}");
        for ((gv, gp), (wv, wp)) in got.iter().zip(want) {
            assert_eq!(gv.as_slice(), *wv);
            assert!((gp - wp).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn single_sensor_marginals_are_the_distribution() {
        let sigma = decompose_marginals(&Marginals(vec![2.0 / 3.0, 1.0 / 3.0]), 1).unwrap();
        assert_support(&sigma, &[(&[0], 2.0 / 3.0), (&[1], 1.0 / 3.0)]);
    }

    #[test]
    fn two_sensors_with_a_certain_node() {
        let sigma = decompose_marginals(&Marginals(vec![1.0, 0.5, 0.5]), 2).unwrap();
        assert_support(&sigma, &[(&[0, 1], 0.5), (&[0, 2], 0.5)]);
    }

    #[test]
    fn two_sensors_three_equal_nodes() {
        let t = 1.0 / 3.0;
        let sigma = decompose_marginals(&Marginals(vec![2.0 * t; 3]), 2).unwrap();
        assert_support(&sigma, &[(&[0, 1], t), (&[0, 2], t), (&[1, 2], t)]);
    }

    #[test]
    fn slack_mass_leaves_room_for_smaller_placements() {
        let sigma = decompose_marginals(&Marginals(vec![0.25, 0.25]), 1).unwrap();
        assert_support(&sigma, &[(&[], 0.5), (&[0], 0.25), (&[1], 0.25)]);
    }

    #[test]
    fn rejects_bad_marginals() {
        assert!(decompose_marginals(&Marginals(vec![1.2]), 1).is_err());
        assert!(decompose_marginals(&Marginals(vec![0.8, 0.8]), 1).is_err());
        assert!(decompose_marginals(&Marginals(vec![-0.1]), 1).is_err());
    }

    #[test]
    fn chain_profile_and_certificate() {
        let inst = three_component(vec![0.2, 0.2, 1.0], 1);
        let profile = solve_cover_packing(&inst, &CoverConfig::default()).unwrap();
        assert_eq!(profile.cover.size(), 2);
        assert_eq!(profile.packing.components, vec![0, 2]);
        let cert = &profile.certificate;
        assert!((cert.eps - 0.4).abs() < 1e-12);
        assert!((cert.worst_case_loss - 0.5).abs() < 1e-12);
        assert!((cert.worst_case_loss - cert.payoff_floor - cert.eps).abs() < 1e-12);
        assert!(!cert.heuristic);
        let rho = marginals(&inst, &profile.defense).unwrap();
        assert_eq!(rho.values(), &[0.5, 0.5]);
        let eps = epsilon_of_profile(&inst, &profile.defense, &profile.attack, DEFAULT_NODE_LIMIT).unwrap();
        assert!(eps <= cert.eps + 1e-7);
    }

    #[test]
    fn equal_weights_give_an_exact_equilibrium() {
        let inst = three_component(vec![1.0; 3], 1);
        let profile = solve_cover_packing(&inst, &CoverConfig::default()).unwrap();
        assert!(profile.certificate.eps.abs() < 1e-12);
        let eps = epsilon_of_profile(&inst, &profile.defense, &profile.attack, DEFAULT_NODE_LIMIT).unwrap();
        assert!(eps < 1e-7);
    }

    #[test]
    fn cover_within_budget_is_redirected() {
        let inst = three_component(vec![1.0; 3], 2);
        let err = solve_cover_packing(&inst, &CoverConfig::default()).unwrap_err();
        assert!(matches!(err, crate::Error::Contract(_)));
    }

    #[test]
    fn certificate_at_the_budget_boundary_vanishes() {
        let cert = EpsilonCertificate::cover_packing(3, 3, 3, 0.2, 1.0, false);
        assert_eq!(cert.worst_case_loss, 0.0);
        assert_eq!(cert.eps, 0.0);
    }

    fn focus_instance(low: f64) -> Instance {
        // v1{e1,e2} v2{e3,e4} v3{e2,e4} v4{e5}; top class {e1,e3}
        Instance::from_sets(
            vec![vec![0, 1], vec![2, 3], vec![1, 3], vec![4]],
            vec![1.0, low, 1.0, 0.3, 0.2],
            1,
        )
        .unwrap()
    }

    #[test]
    fn focused_profile_is_exact_when_the_gap_is_wide() {
        let inst = focus_instance(0.4);
        let outcome = focused_profile(&inst, None, &CoverConfig::default()).unwrap();
        let profile = outcome.profile().expect("condition 0.6 >= 0.5 holds");
        let cert = &profile.certificate;
        assert_eq!(cert.eps, 0.0);
        assert!((cert.worst_case_loss - 0.5).abs() < 1e-12);
        let (_, attack_value) = best_response_attack(&inst, &profile.defense).unwrap();
        let (_, defense_value) = best_response_defense(&inst, &profile.attack, DEFAULT_NODE_LIMIT).unwrap();
        assert!((attack_value - 0.5).abs() < 1e-12);
        assert!((defense_value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn focused_profile_reports_a_narrow_gap() {
        let inst = focus_instance(0.8);
        match focused_profile(&inst, None, &CoverConfig::default()).unwrap() {
            FocusedOutcome::ConditionFails { gap, required } => {
                assert!((gap - 0.2).abs() < 1e-12);
                assert!((required - 0.5).abs() < 1e-12);
            }
            other => panic!("expected a failed condition, got {other:?}"),
        }
    }

    #[test]
    fn focused_budget_equal_to_cover_needs_full_gap() {
        let inst = focus_instance(0.4).with_budget(2).unwrap();
        let outcome = focused_profile(&inst, None, &CoverConfig::default()).unwrap();
        assert!(outcome.profile().is_none());
    }

    #[test]
    fn focused_class_must_share_a_weight() {
        let inst = focus_instance(0.4);
        assert!(focused_profile(&inst, Some(&[0, 1]), &CoverConfig::default()).is_err());
    }

    #[test]
    fn comparison_of_certificates() {
        let full = EpsilonCertificate::cover_packing(1, 4, 2, 0.5, 1.0, false);
        let focused = EpsilonCertificate::focused(1, 2, 2, 1.0, false);
        let report = certificate_improvement(&full, &focused);
        assert!((report.full_worst_case - 0.75).abs() < 1e-12);
        assert!((report.focused_worst_case - 0.5).abs() < 1e-12);
        assert!(report.worst_case_improved);

        let same = certificate_improvement(&full, &full);
        assert!(same.worst_case_improved && !same.focused_eps_smaller);
    }

    #[test]
    fn focus_on_everything_matches_full_certificate_for_uniform_weights() {
        let inst = three_component(vec![1.0; 3], 1);
        let full = solve_cover_packing(&inst, &CoverConfig::default()).unwrap();
        let all: Vec<usize> = (0..3).collect();
        let focused = focused_profile(&inst, Some(&all), &CoverConfig::default()).unwrap();
        let focused = focused.profile().unwrap();
        assert_eq!(full.certificate.worst_case_loss, focused.certificate.worst_case_loss);
        assert_eq!(full.certificate.eps, focused.certificate.eps);
    }
}
