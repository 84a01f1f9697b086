use std::sync::Arc;

use geodesic_partners::flows::*;
use geodesic_partners::fuchsian::*;
use geodesic_partners::psl2core::{random_element, PslElement, C_METRIC};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn octagon_point(seed: u64) -> QuotientPoint {
    let g = builtin_octagon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    QuotientPoint::new(&g, random_element(&mut rng, 0.8))
}

#[test]
fn flow_laws() {
    let x = octagon_point(1);
    assert_eq!(geodesic_flow(&x, 0.0).rep, x.rep);
    let a = geodesic_flow(&geodesic_flow(&x, 1.0), 2.0);
    let b = geodesic_flow(&x, 3.0);
    assert!(a.rep.rel_residual(&b.rep) < 1e-14);
    let a = horocycle_flow(&horocycle_flow(&x, 0.2), 0.3);
    assert!(a.rep.rel_residual(&horocycle_flow(&x, 0.5).rep) < 1e-15);
    let a = conj_horocycle_flow(&conj_horocycle_flow(&x, -0.2), 0.7);
    assert!(a.rep.rel_residual(&conj_horocycle_flow(&x, 0.5).rep) < 1e-15);
}

#[test]
fn periodic_orbit_returns() {
    let g = builtin_octagon();
    for letters in [vec![1], vec![1, 2], vec![1, -3, 2]] {
        let w = Word::from_letters(&g, &letters).unwrap();
        let orbit = orbit_from_word(&g, &w).unwrap();
        let x = orbit.point(&g);
        assert!(geodesic_flow(&x, orbit.period).approx_eq(&x));
    }
}

#[test]
fn constructed_section_membership() {
    let x = octagon_point(2);
    let y = x.right(&(PslElement::c(0.1) * PslElement::b(0.05)));
    let c = section_solve(&x, &y, 0.2, 0.0).unwrap();
    assert!((c.u - 0.1).abs() < 1e-12 && (c.s - 0.05).abs() < 1e-12);
    assert!(c.gamma.is_empty() && c.t_star.abs() < 1e-12);
    assert!(c.residual < 1e-11);
}

#[test]
fn generic_frame_has_no_small_return() {
    for seed in 0..5 {
        let x = octagon_point(100 + seed);
        let y = geodesic_flow(&x, 2.0);
        assert!(section_solve(&x, &y, 0.01, 1.0).is_none());
    }
}

#[test]
fn section_reassembly() {
    let g = builtin_octagon();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ball = g.ball(3).unwrap();
    for k in 0..20 {
        let x = QuotientPoint::new(&g, random_element(&mut rng, 0.5));
        let (u, s, t) = (rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.5..0.5));
        let gamma = &ball[(k * 13) % ball.len()];
        let rep_y = gamma.element.inverse() * x.rep * PslElement::c(u) * PslElement::b(s) * PslElement::a(t);
        let y = QuotientPoint::new(&g, rep_y);
        let c = section_solve(&x, &y, 0.2, 1.0).unwrap();
        let rebuilt = c.gamma.element.inverse() * x.rep * PslElement::c(c.u) * PslElement::b(c.s) * PslElement::a(c.t_star);
        assert!(rebuilt.rel_residual(&rep_y) < 1e-11);
        assert!((c.u - u).abs() < 1e-10 && (c.s - s).abs() < 1e-10);
    }
}

#[test]
fn shadowing() {
    let x1 = octagon_point(4);
    let x2 = x1.clone();
    let r = verify_shadowing(&x1, &x2, &x1, ShadowWitness { s: 0.0, u: 0.0 }, 0.1, 10.0, 256).unwrap();
    assert_eq!(r.forward_max_ratio, 0.0);
    assert_eq!(r.backward_max_ratio, 0.0);

    let x = horocycle_flow(&x1, 0.1);
    let r = verify_shadowing(&x1, &x, &x, ShadowWitness { s: 0.1, u: 0.0 }, 0.1, 10.0, 256).unwrap();
    assert!(r.holds && r.forward_max_ratio <= C_METRIC);

    for r in random_shadowing_runs(&x1, 0.1, 10.0, 200, 9) {
        assert!(r.holds, "{r:?}");
    }

    let bad = verify_shadowing(&x1, &x1, &x, ShadowWitness { s: 0.2, u: 0.0 }, 0.1, 10.0, 16);
    assert!(matches!(bad, Err(FlowError::WitnessInvalid(_))));
}

#[test]
fn stable_contraction_is_monotone() {
    let x = octagon_point(5);
    let y = horocycle_flow(&x, 0.05);
    let mut prev = f64::INFINITY;
    for k in 0..40 {
        let t = k as f64 * 0.25;
        let d = geodesic_partners::psl2core::ref_distance(&geodesic_flow(&x, t).rep, &geodesic_flow(&y, t).rep);
        assert!(d <= prev * C_METRIC);
        prev = d;
    }
}

#[test]
fn reversibility() {
    let x = octagon_point(6);
    assert!(verify_reversibility(&x, &x, 0.0).unwrap());

    let g: Arc<GroupPresentation> = builtin_octagon();
    let w = Word::from_letters(&g, &[2, 1]).unwrap();
    let orbit = orbit_from_word(&g, &w).unwrap();
    let p = orbit.point(&g);
    assert!(verify_reversibility(&p, &p, orbit.period).unwrap());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let x = QuotientPoint::new(&g, random_element(&mut rng, 0.8));
        let y = geodesic_flow(&x, 1.7);
        assert!(verify_reversibility(&x, &y, 1.7).unwrap());
    }
    assert!(matches!(verify_reversibility(&x, &x, 1.0), Err(FlowError::PremiseFailed(_))));
}
