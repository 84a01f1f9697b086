//! The end-to-end acceptance suite, shared by `verify all` and the
//! `acceptance` test target.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::closing::{anosov_close, near_return, solve_sigma, sigma_quadratic};
use crate::flows::{random_shadowing_runs, verify_reversibility};
use crate::fuchsian::{
    estimate_sigma0, orbit_from_word, GroupPresentation, PeriodicOrbit, QuotientPoint, Word,
};
use crate::partner::{
    build_crossing_with_angle, construct_partner, construct_pseudo_partner, find_crossings_in,
    reconnect_double, search_crossings, AngleKind, CrossingHit, EncounterInputs, PartnerCertificate,
};
use crate::psl2core::{
    classify, nak_decompose, random_element, rotation_factor, tri_decompose, Classification,
    FactorOrder, PslElement, C_METRIC,
};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    fn new(id: u32, name: &str, passed: bool, detail: String) -> Self {
        CriterionOutcome { id, name: name.to_string(), passed, detail }
    }
}

/// Runs every criterion against `group` (normally the octagon).
pub fn run_all(group: &Arc<GroupPresentation>, seed: u64) -> Vec<CriterionOutcome> {
    let mut out = vec![decompositions(seed), sigma_solver(seed), closing_certificates(group, seed), crossing_geometry(group)];
    let inputs = match estimate_sigma0(group, seed) {
        Ok(e) => EncounterInputs::new(e.sigma0),
        Err(e) => {
            for (id, name) in [(5, "partner"), (6, "pseudo"), (7, "reconnect"), (9, "encounter")] {
                out.push(CriterionOutcome::new(id, name, false, format!("σ₀ estimate failed: {e}")));
            }
            out.push(group_sanity(group, seed));
            out.sort_by_key(|c| c.id);
            return out;
        }
    };
    let partners = partner_sweep(group, &inputs);
    out.push(partner_criterion(&partners));
    out.push(pseudo_criterion(group));
    out.push(reconnect_criterion(group, &partners));
    out.push(group_sanity(group, seed));
    out.push(encounter_criterion(group, &inputs, &partners));
    out
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Criterion 1.
pub fn decompositions(seed: u64) -> CriterionOutcome {
    let mut r = rng(seed, 1);
    let tol = crate::psl2core::ToleranceConfig::default();
    let mut worst_nak: f64 = 0.0;
    let mut worst_tri: f64 = 0.0;
    let mut skipped = 0usize;
    for _ in 0..10_000 {
        let g = random_element(&mut r, 3.0);
        worst_nak = worst_nak.max(nak_decompose(&g).assemble().rel_residual(&g));
        for order in [FactorOrder::CBA, FactorOrder::BCA] {
            match tri_decompose(&g, order, &tol) {
                Ok(f) => worst_tri = worst_tri.max(f.assemble().rel_residual(&g)),
                Err(_) => skipped += 1,
            }
        }
    }
    let mut worst_rot: f64 = 0.0;
    for k in 0..1000 {
        let phi = -3.0 + 6.0 * (k as f64 + 0.5) / 1000.0;
        for order in [FactorOrder::CBA, FactorOrder::BCA] {
            let f = rotation_factor(phi, order).expect("|φ| < π");
            worst_rot = worst_rot.max(f.assemble().mat().max_abs_diff(&PslElement::d(phi).mat()).min(
                f.assemble().mat().add(&PslElement::d(phi).mat()).frobenius(),
            ));
        }
    }
    let passed = worst_nak < 1e-11 && worst_tri < 1e-11 && worst_rot < 1e-13;
    CriterionOutcome::new(
        1,
        "decomposition round trips",
        passed,
        format!("NAK {worst_nak:.2e}, triangular {worst_tri:.2e} ({skipped} small pivots), rotation {worst_rot:.2e}"),
    )
}

/// Root of the σ-quadratic by plain bisection on `[-2|u|e^{-T}, 2|u|e^{-T}]`.
pub fn bisect_sigma(u: f64, s: f64, t: f64) -> Option<f64> {
    if u == 0.0 {
        return Some(0.0);
    }
    let w = 2.0 * u.abs() * (-t).exp();
    let (mut lo, mut hi) = (-w, w);
    let f = |x: f64| sigma_quadratic(u, s, t, x);
    let (flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return None;
    }
    let rising = fhi > flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Criterion 2.
pub fn sigma_solver(seed: u64) -> CriterionOutcome {
    let mut r = rng(seed, 2);
    let mut worst_quad: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut failures = 0usize;
    for _ in 0..10_000 {
        let u = r.gen_range(-0.2499..0.2499);
        let s = r.gen_range(-0.2499..0.2499);
        let t = r.gen_range(1.0..=20.0);
        let sigma = solve_sigma(u, s, t).expect("inside the domain");
        let q = sigma_quadratic(u, s, t, sigma).abs() / t.exp();
        worst_quad = worst_quad.max(q);
        let bound_ok = sigma.abs() < 2.0 * u.abs() * (-t).exp() || (u == 0.0 && sigma == 0.0);
        match bisect_sigma(u, s, t) {
            Some(b) => worst_oracle = worst_oracle.max((b - sigma).abs()),
            None => failures += 1,
        }
        if !bound_ok {
            failures += 1;
        }
    }
    let passed = failures == 0 && worst_quad < 1e-12 && worst_oracle < 1e-12;
    CriterionOutcome::new(
        2,
        "σ-solver",
        passed,
        format!("quadratic/e^T {worst_quad:.2e}, oracle gap {worst_oracle:.2e}, failures {failures}"),
    )
}

/// Criterion 3.
pub fn closing_certificates(group: &Arc<GroupPresentation>, seed: u64) -> CriterionOutcome {
    let ball = match group.default_ball() {
        Ok(b) => b,
        Err(e) => return CriterionOutcome::new(3, "closing certificates", false, e.to_string()),
    };
    let decks: Vec<Word> = ball
        .iter()
        .filter(|w| w.len() >= 2 && w.cyclic_reduce(group).len() == w.len())
        .cloned()
        .collect();
    let mut r = rng(seed, 3);
    let jobs: Vec<(Word, f64, f64, f64)> = (0..1000)
        .map(|_| {
            let w = decks[r.gen_range(0..decks.len())].clone();
            (w, r.gen_range(-0.2..0.2), r.gen_range(-0.2..0.2), r.gen_range(-1.0..1.0))
        })
        .collect();
    let results: Vec<Result<(f64, bool, bool, bool), String>> = jobs
        .par_iter()
        .map(|(w, u, s, shift)| {
            let nr = near_return(group, w, *u, *s, *shift).map_err(|e| e.to_string())?;
            let x = QuotientPoint::new(group, nr.point);
            let cert = match anosov_close(&x, nr.t, nr.u, nr.s) {
                Ok(c) => c,
                Err(crate::closing::ClosingError::BoundViolated { certificate, .. }) => *certificate,
                Err(e) => return Err(format!("{w}: {e}")),
            };
            let ck = &cert.bound_checks;
            Ok((cert.residual_identity, ck["log_gap"], ck["t_prime_agreement"], ck["sign_law"]))
        })
        .collect();
    let mut worst_id: f64 = 0.0;
    let (mut f33, mut fagree, mut fsign, mut errors) = (0, 0, 0, 0);
    let mut first_error = String::new();
    for r in results {
        match r {
            Ok((id, a, b, c)) => {
                worst_id = worst_id.max(id);
                f33 += !a as usize;
                fagree += !b as usize;
                fsign += !c as usize;
            }
            Err(e) => {
                if errors == 0 {
                    first_error = e;
                }
                errors += 1;
            }
        }
    }
    let passed = errors == 0 && worst_id < 1e-9 && f33 + fagree + fsign == 0;
    CriterionOutcome::new(
        3,
        "closing certificates",
        passed,
        format!(
            "1000 near-returns: identity {worst_id:.2e}, log-gap failures {f33}, T' disagreements {fagree}, sign-law failures {fsign}, errors {errors} {first_error}"
        ),
    )
}

/// Orbits used for the crossing-geometry sweep.
pub const CROSSING_ORBITS: [&[i32]; 8] = [
    &[1, 2],
    &[1, -2],
    &[1, 2, 3],
    &[1, 2, -1, -2],
    &[1, 2, 3, 4],
    &[1, 3, 3, 1, -3, -3],
    &[1, 2, 1, 3, 1, -3, -1, -2],
    &[1, 2, 2, 3, 1, -3, -2, -2],
];

/// Criterion 4.
pub fn crossing_geometry(group: &Arc<GroupPresentation>) -> CriterionOutcome {
    let ball = match group.ball(6) {
        Ok(b) => b,
        Err(e) => return CriterionOutcome::new(4, "crossing geometry", false, e.to_string()),
    };
    let mut count = 0usize;
    let mut worst_id: f64 = 0.0;
    let mut ineq_fail = 0usize;
    for letters in CROSSING_ORBITS {
        let w = Word::from_letters(group, letters).expect("valid letters");
        let orbit = orbit_from_word(group, &w).expect("hyperbolic");
        for e in find_crossings_in(group, &orbit, &ball) {
            count += 1;
            worst_id = worst_id.max(e.trace_identity_residual);
            ineq_fail += !e.loop_inequality as usize;
        }
    }
    let mut worst_theta: f64 = 0.0;
    let mut worst_det: f64 = 0.0;
    let mut missed = 0usize;
    for k in 1..=4 {
        let gamma = Word::from_letters(group, &[k]).expect("generator");
        for theta in [0.05, 0.3, std::f64::consts::FRAC_PI_2, 2.5] {
            let Ok(c) = build_crossing_with_angle(group, &gamma, theta) else {
                missed += 1;
                continue;
            };
            worst_det = worst_det.max((c.det_k - 1.0).abs());
            let probe = PeriodicOrbit { word: gamma.clone(), frame: c.frame, period: c.l + 1.0 };
            let found = find_crossings_in(group, &probe, std::slice::from_ref(&gamma.inverse()));
            match found.iter().map(|e| (e.theta - theta).abs()).reduce(f64::min) {
                Some(d) => worst_theta = worst_theta.max(d),
                None => missed += 1,
            }
        }
    }
    let passed = count > 0 && worst_id < 1e-10 && ineq_fail == 0 && missed == 0 && worst_theta < 1e-9 && worst_det < 1e-12;
    CriterionOutcome::new(
        4,
        "crossing geometry",
        passed,
        format!(
            "{count} crossings (conjugators ≤ 6): trace identity {worst_id:.2e}, inequality failures {ineq_fail}; round trip θ {worst_theta:.2e}, det K {worst_det:.2e}, missed {missed}"
        ),
    )
}

/// Angles of the partner sweep.
pub const PARTNER_PHIS: [f64; 3] = [0.05, 0.1, 0.2];

/// Partner certificates for up to five orbits per angle.
pub fn partner_sweep(group: &Arc<GroupPresentation>, inputs: &EncounterInputs) -> Vec<Result<PartnerCertificate, String>> {
    let mut out = Vec::new();
    for phi in PARTNER_PHIS {
        let hits = search_crossings(group, phi, AngleKind::Phi, 0.2, &[1, 2, 3], 2, 5, &|_, e| e.loop_inequality)
            .unwrap_or_default();
        out.extend(certify_partners(group, inputs, &hits));
    }
    out
}

fn certify_partners(group: &Arc<GroupPresentation>, inputs: &EncounterInputs, hits: &[CrossingHit]) -> Vec<Result<PartnerCertificate, String>> {
    hits.iter()
        .map(|h| construct_partner(group, &h.orbit, &h.crossing, inputs).map_err(|e| format!("{}: {e}", h.orbit.word)))
        .collect()
}

/// Criterion 5.
pub fn partner_criterion(partners: &[Result<PartnerCertificate, String>]) -> CriterionOutcome {
    let mut ok = 0usize;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_close: f64 = 0.0;
    let mut failed: Vec<String> = Vec::new();
    let mut per_phi = [0usize; 3];
    for p in partners {
        match p {
            Ok(c) => {
                worst_ratio = worst_ratio.max(c.asymptotic_ratio.abs());
                worst_close = worst_close.max(c.closeness_max_observed / (c.closeness_bound * C_METRIC));
                let keys = ["action_bound", "t_prime_lt_t", "closeness", "conj_class", "t_prime_closed_form"];
                let bad: Vec<&str> = keys.iter().copied().filter(|k| !c.bound_checks[*k]).collect();
                if bad.is_empty() && c.asymptotic_ratio.abs() <= 9.0 {
                    ok += 1;
                    if let Some(i) = PARTNER_PHIS.iter().position(|&f| (c.phi - f).abs() < 0.2 * f) {
                        per_phi[i] += 1;
                    }
                } else {
                    failed.push(format!("{} {:?}", c.original.word, bad));
                }
            }
            Err(e) => failed.push(e.clone()),
        }
    }
    let passed = failed.is_empty() && ok >= 5 && per_phi.iter().all(|&n| n > 0);
    CriterionOutcome::new(
        5,
        "partner certificates",
        passed,
        format!(
            "{ok} certified (per φ {per_phi:?}), max |ratio| {worst_ratio:.3}, max closeness/(9|sin|C) {worst_close:.3}; failures: {failed:?}"
        ),
    )
}

/// Criterion 6.
pub fn pseudo_criterion(group: &Arc<GroupPresentation>) -> CriterionOutcome {
    let mut ok = 0usize;
    let mut worst_bound: f64 = 0.0;
    let mut worst_chain: f64 = 0.0;
    let mut failed: Vec<String> = Vec::new();
    for theta in [0.1, 0.2] {
        let accept = |o: &PeriodicOrbit, e: &crate::partner::CrossingEvent| e.l >= 1.0 && o.period - e.l >= 1.0;
        let hits = search_crossings(group, theta, AngleKind::Theta, 0.2, &[1, 2, 3], 2, 3, &accept).unwrap_or_default();
        for h in hits {
            match construct_pseudo_partner(group, &h.orbit, &h.crossing) {
                Ok(c) => {
                    worst_bound = worst_bound.max(c.total_period_ratio);
                    worst_chain = worst_chain.max(c.chain_residual);
                    let ck = &c.bound_checks;
                    if ck["total_period_bound"] && ck["t1_prime_lt_t1"] && ck["t2_prime_lt_t2"] && ck["chain"] {
                        ok += 1;
                    } else {
                        failed.push(format!("{}", h.orbit.word));
                    }
                }
                Err(e) => failed.push(format!("{}: {e}", h.orbit.word)),
            }
        }
    }
    let passed = failed.is_empty() && ok >= 3;
    CriterionOutcome::new(
        6,
        "pseudo-partners",
        passed,
        format!("{ok} certified, max total-period ratio {worst_bound:.3}, max chain residual {worst_chain:.2e}; failures: {failed:?}"),
    )
}

/// Criterion 7.
pub fn reconnect_criterion(group: &Arc<GroupPresentation>, partners: &[Result<PartnerCertificate, String>]) -> CriterionOutcome {
    let mut ok = 0usize;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    let mut failed: Vec<String> = Vec::new();
    for p in partners.iter().flatten() {
        match reconnect_double(group, p) {
            Ok(r) => {
                worst_ratio = worst_ratio.max(r.ratio_sum);
                worst_trace = worst_trace.max((r.t_hat - r.t_hat_trace).abs());
                if r.bound_checks["sum_bound"] && r.bound_checks["trace_period"] {
                    ok += 1;
                } else {
                    failed.push(format!("{}", p.original.word));
                }
            }
            Err(e) => failed.push(format!("{}: {e}", p.original.word)),
        }
    }
    let passed = failed.is_empty() && ok > 0;
    CriterionOutcome::new(
        7,
        "reconnection",
        passed,
        format!("{ok} doubled orbits, max sum ratio {worst_ratio:.3}, max |T̂ - trace period| {worst_trace:.2e}; failures: {failed:?}"),
    )
}

/// Criterion 8.
pub fn group_sanity(group: &Arc<GroupPresentation>, seed: u64) -> CriterionOutcome {
    let mut worst_rel: f64 = 0.0;
    for rel in &group.relations {
        worst_rel = worst_rel.max(group.relation_residual(rel).unwrap_or(f64::INFINITY));
    }
    let ball = match group.ball(6) {
        Ok(b) => b,
        Err(e) => return CriterionOutcome::new(8, "group sanity", false, e.to_string()),
    };
    let tol = group.tolerances;
    let nontrivial: Vec<&Word> = ball.iter().filter(|w| !w.is_empty()).collect();
    let not_hyp = nontrivial
        .par_iter()
        .filter(|w| classify(&w.element, &tol) != Classification::Hyperbolic)
        .count();
    let min_tr = nontrivial.iter().map(|w| w.element.trace()).fold(f64::INFINITY, f64::min);
    let eps0 = min_tr - 2.0;

    let base = QuotientPoint::new(group, PslElement::IDENTITY);
    let shadow = random_shadowing_runs(&base, 0.1, 8.0, 1000, seed);
    let worst_shadow = shadow.iter().map(|r| r.forward_max_ratio.max(r.backward_max_ratio)).fold(0.0, f64::max);
    let shadow_ok = shadow.iter().all(|r| r.holds);

    let mut r = rng(seed, 8);
    let mut rev_fail = 0usize;
    for _ in 0..1000 {
        let g = random_element(&mut r, 1.5);
        let t = r.gen_range(0.0..6.0);
        let x = QuotientPoint::new(group, g);
        let y = x.right(&PslElement::a(t));
        if !matches!(verify_reversibility(&x, &y, t), Ok(true)) {
            rev_fail += 1;
        }
    }
    let passed = worst_rel < 1e-9 && not_hyp == 0 && eps0 > 0.0 && shadow_ok && rev_fail == 0;
    CriterionOutcome::new(
        8,
        "group sanity",
        passed,
        format!(
            "relator {worst_rel:.2e}; {} words ≤ 6, non-hyperbolic {not_hyp}, ε₀ = {eps0:.6}; shadowing max ratio {worst_shadow:.3}; reversibility failures {rev_fail}",
            nontrivial.len()
        ),
    )
}

/// Criterion 9. Only certificates with `φ < φ₀` carry the lower bound, so
/// the sweep is topped up with crossings found on longer words.
pub fn encounter_criterion(
    group: &Arc<GroupPresentation>,
    inputs: &EncounterInputs,
    partners: &[Result<PartnerCertificate, String>],
) -> CriterionOutcome {
    let phi0 = inputs.phi0();
    let target = phi0 * 0.6;
    let hits = search_crossings(group, target, AngleKind::Phi, 0.66, &[4, 5], 2, 3, &|_, e| e.loop_inequality)
        .unwrap_or_default();
    let extra = certify_partners(group, inputs, &hits);
    let mut in_regime = 0usize;
    let mut min_tenc = f64::INFINITY;
    let mut failed: Vec<String> = Vec::new();
    for p in partners.iter().chain(extra.iter()) {
        match p {
            Ok(c) if c.encounter.in_regime => {
                in_regime += 1;
                min_tenc = min_tenc.min(c.encounter.t_enc);
                if !c.encounter.lower_bound || !c.all_pass() {
                    let bad: Vec<&String> = c.bound_checks.iter().filter(|(_, v)| !**v).map(|(k, _)| k).collect();
                    failed.push(format!("{} φ={:.4} {bad:?}", c.original.word, c.phi));
                }
            }
            Ok(_) => {}
            Err(e) => failed.push(e.clone()),
        }
    }
    let passed = failed.is_empty() && in_regime > 0;
    CriterionOutcome::new(
        9,
        "encounter duration",
        passed,
        format!(
            "φ₀ = {phi0:.5} (σ₀ = {:.4}); {in_regime} certificates with φ < φ₀, min t_enc {min_tenc:.3} vs ln(9/4) = {:.3}; failures: {failed:?}",
            inputs.sigma0,
            (9.0f64 / 4.0).ln()
        ),
    )
}
