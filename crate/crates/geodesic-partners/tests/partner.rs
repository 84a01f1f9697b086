use std::f64::consts::{FRAC_PI_2, PI};

use geodesic_partners::fuchsian::*;
use geodesic_partners::partner::*;
use geodesic_partners::psl2core::PslElement;

fn inputs() -> EncounterInputs {
    EncounterInputs::new(2.0)
}

#[test]
fn octagon_crossings_satisfy_trace_identity() {
    let g = builtin_octagon();
    let w = Word::from_letters(&g, &[1, 2, -1, 3]).unwrap();
    let orbit = orbit_from_word(&g, &w).unwrap();
    let events = find_crossings(&g, &orbit, 4).unwrap();
    assert!(!events.is_empty());
    for e in &events {
        assert!(e.trace_identity_residual < 1e-10);
        assert!(e.residual < 1e-11, "{}", e.residual);
        assert!(e.loop_inequality);
        assert!(e.theta > 0.0 && e.theta < PI);
        assert!(e.tau >= 0.0 && e.tau < orbit.period);
        assert!(e.l > 0.0 && e.l < orbit.period);
        // cosh(ρ/2) = cosh(L/2) cos(θ/2)
        let rho = e.rho(&g);
        assert!(((rho / 2.0).cosh() - (e.l / 2.0).cosh() * (e.theta / 2.0).cos()).abs() < 1e-10 * (rho / 2.0).cosh());
        // the orbit word itself never shows up as a conjugator
        assert!((e.conjugator.class_trace(&g) - w.class_trace(&g)).abs() > 1e-9 || e.conjugator.len() > w.len());
    }
    for pair in events.windows(2) {
        let same = (pair[0].tau - pair[1].tau).abs() < CROSSING_DEDUP_TOL && (pair[0].l - pair[1].l).abs() < CROSSING_DEDUP_TOL;
        assert!(!same);
    }
}

#[test]
fn own_axis_is_not_a_crossing() {
    let g = builtin_octagon();
    let w = Word::from_letters(&g, &[1, 2]).unwrap();
    let orbit = orbit_from_word(&g, &w).unwrap();
    assert!(extract_crossing(&orbit.frame, &w.element).is_none());
    assert!(extract_crossing(&orbit.frame, &w.element.inverse()).is_none());
}

#[test]
fn constructed_crossing_round_trip() {
    let g = builtin_octagon();
    for letters in [vec![1], vec![2, 3]] {
        let gamma = Word::from_letters(&g, &letters).unwrap();
        let len = orbit_from_word(&g, &gamma).unwrap().period;
        for theta in [0.05, 0.7, FRAC_PI_2, 2.5] {
            let c = build_crossing_with_angle(&g, &gamma, theta).unwrap();
            assert!(c.residual < 1e-10);
            assert!((c.det_k - 1.0).abs() < 1e-12);
            let raw = extract_crossing(&c.frame, &gamma.element.inverse()).unwrap();
            assert!((raw.theta - theta).abs() < 1e-9);
            assert!((raw.l - c.l).abs() < 1e-9);
            assert!(raw.tau.abs() < 1e-9);
            let want = 2.0 * ((len / 2.0).cosh() / (theta / 2.0).cos()).acosh();
            assert!((c.l - want).abs() < 1e-12 * want);
        }
        // θ → 0⁺ recovers the length of γ
        let c = build_crossing_with_angle(&g, &gamma, 1e-6).unwrap();
        assert!((c.l - len).abs() < 1e-9);
    }
    let gamma = Word::from_letters(&g, &[1]).unwrap();
    assert!(matches!(build_crossing_with_angle(&g, &gamma, 0.0), Err(PartnerError::AngleOutOfRange(_))));
    assert!(matches!(build_crossing_with_angle(&g, &gamma, PI), Err(PartnerError::AngleOutOfRange(_))));
}

#[test]
fn synthetic_partner_certificate() {
    let (t1, t2, phi) = (9.0, 10.0, 0.1);
    let (g, orbit, ev) = synthetic_crossing_group(t1, t2, phi).unwrap();
    assert!((orbit.period - (t1 + t2)).abs() < 1e-12);
    assert!((ev.phi() - phi).abs() < 1e-12);
    let cert = construct_partner(&g, &orbit, &ev, &inputs()).unwrap();
    assert!(cert.all_pass(), "{:?}", cert.bound_checks);
    assert!(cert.t_prime < orbit.period);
    assert!((cert.t_prime - cert.t_prime_closed_form).abs() < 1e-10);
    assert!(cert.section_deviation < 1e-10);
    assert!(cert.closeness_max_observed <= 9.0 * (phi / 2.0).sin() * 2.0);
    assert!(cert.closeness_samples >= 128);

    // tr of the partner class against the deck element γ₂γ₁⁻¹
    let (w1, w2) = (&cert.frame.w1, &cert.frame.w2);
    let cls = Word::product(&g, &[w1, &w2.inverse()]).class_trace(&g);
    assert!((cls - cert.partner_trace).abs() < 1e-9 * cls);
    assert!((cert.deck.class_trace(&g) - cls).abs() < 1e-9 * cls);

    // closed form of (T'-T)/2
    let k = (1.0 + (-t1 as f64).exp()) * (1.0 + (-t2 as f64).exp());
    let sin2 = (phi / 2.0).sin().powi(2);
    let want = (1.0 - k * sin2).ln();
    assert!(((cert.t_prime - orbit.period) / 2.0 - want).abs() <= 12.0 * sin2 * (-orbit.period).exp());
}

#[test]
fn partner_preconditions() {
    let (g, orbit, ev) = synthetic_crossing_group(6.0, 7.0, 0.5).unwrap();
    assert!(matches!(construct_partner(&g, &orbit, &ev, &inputs()), Err(PartnerError::AngleTooLarge(_))));
}

#[test]
fn action_difference_asymptotics() {
    let mut ratios = vec![];
    for phi in [0.02, 0.04, 0.08] {
        let (g, orbit, ev) = synthetic_crossing_group(12.0, 13.0, phi).unwrap();
        let cert = construct_partner(&g, &orbit, &ev, &inputs()).unwrap();
        assert!(cert.all_pass(), "{:?}", cert.bound_checks);
        ratios.push(cert.asymptotic_ratio);
    }
    for r in &ratios {
        assert!(r.abs() < 9.0, "{ratios:?}");
    }
}

#[test]
fn octagon_partner_end_to_end() {
    let g = builtin_octagon();
    let hits = search_crossings(&g, 0.1, AngleKind::Phi, 0.5, &[2, 3], 4, 1, &|_, e| e.loop_inequality).unwrap();
    assert!(!hits.is_empty());
    let inputs = EncounterInputs::from_group(&g, 7).unwrap();
    let h = &hits[0];
    let cert = construct_partner(&g, &h.orbit, &h.crossing, &inputs).unwrap();
    assert!(cert.all_pass(), "{:?}", cert.bound_checks);
    // independent re-simulation: the partner closes up under its own word
    let p = &cert.partner;
    let back = p.word.element.inverse() * p.frame * PslElement::a(p.period);
    assert!(back.rel_residual(&p.frame) < 1e-8);
    let orbit_again = orbit_from_word(&g, &p.word).unwrap();
    assert!((orbit_again.period - cert.t_prime).abs() < 1e-9);
}

#[test]
fn encounter_bounds() {
    let inp = inputs();
    let phi0 = inp.phi0();
    for f in [0.1, 0.5, 0.9] {
        let e = encounter(f * phi0, &inp);
        assert!(e.in_regime);
        assert!(e.t_enc > (9.0f64 / 4.0).ln());
        assert!((e.t_enc - (inp.varrho().powi(2) / (f * phi0 / 2.0).sin().powi(2)).ln()).abs() < 1e-12);
    }
    assert!(!encounter(2.0 * phi0, &inp).in_regime);
    assert!((inp.eps_star() - (2.0f64 / 6.0).min(0.125)).abs() < 1e-15);
}

#[test]
fn uniqueness() {
    let (g, orbit, ev) = synthetic_crossing_group(9.0, 10.0, 0.1).unwrap();
    let cert = construct_partner(&g, &orbit, &ev, &inputs()).unwrap();
    assert!(check_uniqueness(&g, &cert, &cert));

    // the same orbit described from the other branch of the crossing
    let rotated = orbit_from_word(&g, &orbit.word.rotate(&g, 1)).unwrap();
    let events = find_crossings(&g, &rotated, 2).unwrap();
    let ev2 = events.iter().find(|e| (e.theta - ev.theta).abs() < 1e-9).unwrap();
    let cert2 = construct_partner(&g, &rotated, ev2, &inputs()).unwrap();
    assert!(check_uniqueness(&g, &cert, &cert2));

    // the single loops at the crossing are different closed orbits
    for w in [&cert.frame.w1, &cert.frame.w2] {
        let lp = orbit_from_word(&g, w).unwrap();
        assert!(!same_closed_orbit(&g, &cert.partner, &lp).0);
    }
    // and so are the components of a pseudo-partner
    let (gp, orbit_p, ev_p) = synthetic_crossing_group(3.0, 4.0, PI - 0.1).unwrap();
    let pseudo = construct_pseudo_partner(&gp, &orbit_p, &ev_p).unwrap();
    assert!(!same_closed_orbit(&gp, &pseudo.orbit1, &pseudo.orbit2).0);
    assert!(!same_closed_orbit(&gp, &orbit_p, &pseudo.orbit1).0);
}

#[test]
fn pseudo_partner() {
    let (t1, t2, theta) = (3.0, 4.0, 0.2);
    let (g, orbit, ev) = synthetic_crossing_group(t1, t2, PI - theta).unwrap();
    assert!((ev.theta - theta).abs() < 1e-12);
    let cert = construct_pseudo_partner(&g, &orbit, &ev).unwrap();
    assert!(cert.all_pass(), "{:?}", cert.bound_checks);
    assert!(cert.orbit1.period < cert.frame.t1 && cert.orbit2.period < cert.frame.t2);
    let total = cert.orbit1.period + cert.orbit2.period;
    assert!((cert.total_period - total).abs() < 1e-12);
    let lim = 10.0 * (theta / 2.0).sin().powi(2) * ((-t1 as f64).exp() + (-t2 as f64).exp());
    assert!(((total - orbit.period) / 2.0 - (theta / 2.0).cos().powi(2).ln()).abs() <= lim);
    // periods again from traces
    for o in [&cert.orbit1, &cert.orbit2] {
        let tr = o.word.class_trace(&g);
        assert!((2.0 * (tr / 2.0).acosh() - o.period).abs() < 1e-9);
    }

    // θ → 0: both closings degenerate
    let (g, orbit, ev) = synthetic_crossing_group(3.0, 4.0, PI - 1e-4).unwrap();
    let cert = construct_pseudo_partner(&g, &orbit, &ev).unwrap();
    assert!((cert.total_period - orbit.period).abs() < 1e-6);
    assert!((cert.closing1.u * cert.closing1.s).abs() < 1e-7);
}

#[test]
fn pseudo_preconditions() {
    let (g, orbit, ev) = synthetic_crossing_group(0.5, 4.0, PI - 0.2).unwrap();
    assert!(matches!(construct_pseudo_partner(&g, &orbit, &ev), Err(PartnerError::PreconditionFailed(_))));
}

#[test]
fn reconnection() {
    let (g, orbit, ev) = synthetic_crossing_group(9.0, 10.0, 0.1).unwrap();
    let cert = construct_partner(&g, &orbit, &ev, &inputs()).unwrap();
    let r = reconnect_double(&g, &cert).unwrap();
    assert!(r.all_pass(), "{:?}", r.bound_checks);
    assert!((r.t_hat - r.t_hat_trace).abs() < 1e-9);
    let sum = orbit.period + cert.t_prime;
    assert!(((r.t_hat - sum) / 2.0).abs() < 10.0 * r.eps * r.eps * (-cert.frame.t2).exp());

    // φ → 0: the doubled orbit approaches period 2T
    let mut gaps = vec![];
    for phi in [0.04, 0.02, 0.01] {
        let (g, orbit, ev) = synthetic_crossing_group(14.0, 15.0, phi).unwrap();
        let cert = construct_partner(&g, &orbit, &ev, &inputs()).unwrap();
        let r = reconnect_double(&g, &cert).unwrap();
        gaps.push((r.t_hat - 2.0 * orbit.period).abs());
    }
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 1e-4, "{gaps:?}");
}

#[test]
fn certificate_json_names() {
    let (g, orbit, ev) = synthetic_crossing_group(9.0, 10.0, 0.1).unwrap();
    let v = serde_json::to_value(&ev).unwrap();
    assert!(v.get("L").is_some());
    assert!(v["orientation"] == "PLUS" || v["orientation"] == "MINUS");
    let cert = construct_partner(&g, &orbit, &ev, &inputs()).unwrap();
    let v = serde_json::to_value(&cert).unwrap();
    assert!(v.get("T_prime").is_some());
}
