use std::f64::consts::{PI, SQRT_2};

use geodesic_partners::psl2core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

#[test]
fn canonical_sign() {
    let g = PslElement::from_mat(Mat2::new(-2.0, 0.0, 0.0, -0.5), &tol()).unwrap();
    assert_eq!(g.mat(), Mat2::new(2.0, 0.0, 0.0, 0.5));
    let h = PslElement::from_mat(Mat2::new(0.0, -1.0, 1.0, 0.0), &tol()).unwrap();
    assert_eq!(h.mat(), Mat2::new(0.0, 1.0, -1.0, 0.0));
}

#[test]
fn rejects_bad_determinant_and_nan() {
    assert!(matches!(
        PslElement::from_mat(Mat2::new(2.0, 0.0, 0.0, 1.0), &tol()),
        Err(Psl2Error::Determinant { .. })
    ));
    assert!(matches!(PslElement::from_mat(Mat2::new(f64::NAN, 0.0, 0.0, 1.0), &tol()), Err(Psl2Error::NonFinite(_))));
}

#[test]
fn subgroups() {
    assert!(PslElement::a(0.0).approx_eq(&PslElement::identity(), &tol()));
    for t in [-3.0, 0.5, 4.0] {
        assert!((PslElement::a(t).trace() - 2.0 * (t / 2.0f64).cosh()).abs() < 1e-12);
    }
    for th in [0.3, 2.0, -2.9] {
        assert!((PslElement::d(th).trace() - 2.0 * (th / 2.0f64).cos().abs()).abs() < 1e-14);
    }
    // d_{2π} is -E, the identity of PSL
    assert!(PslElement::d(2.0 * PI).approx_eq(&PslElement::identity(), &tol()));
    assert!(subgroup_a(f64::INFINITY).is_err());
}

#[test]
fn commutation_rules() {
    let (r, s, u, t) = (0.7, 0.3, -0.4, 1.1);
    let t0 = tol();
    assert!((PslElement::a(-r) * PslElement::b(s) * PslElement::a(r)).approx_eq(&PslElement::b(s * (-r).exp()), &t0));
    assert!((PslElement::a(-r) * PslElement::c(u) * PslElement::a(r)).approx_eq(&PslElement::c(u * r.exp()), &t0));
    assert!((PslElement::c(u) * PslElement::a(t)).approx_eq(&(PslElement::a(t) * PslElement::c(u * t.exp())), &t0));
    assert!((PslElement::d(PI) * PslElement::a(-t)).approx_eq(&(PslElement::a(t) * PslElement::d(PI)), &t0));
}

#[test]
fn classification() {
    assert_eq!(classify(&PslElement::a(1.0), &tol()), Classification::Hyperbolic);
    assert_eq!(classify(&PslElement::d(PI / 3.0), &tol()), Classification::Elliptic);
    assert_eq!(classify(&PslElement::b(5.0), &tol()), Classification::Parabolic);
}

#[test]
fn nak_examples() {
    let f = nak_decompose(&PslElement::identity());
    assert!(f.x.abs() < 1e-15 && (f.y - 1.0).abs() < 1e-15 && f.theta.abs() < 1e-15);
    let f = nak_decompose(&(PslElement::b(0.8) * PslElement::a(2.5f64.ln())));
    assert!((f.x - 0.8).abs() < 1e-14 && (f.y - 2.5).abs() < 1e-14 && f.theta.abs() < 1e-14);
}

#[test]
fn triangular_examples() {
    let f = tri_decompose(&PslElement::identity(), FactorOrder::CBA, &tol()).unwrap();
    assert_eq!((f.u, f.s, f.t), (0.0, 0.0, 0.0));
    let g = PslElement::c(0.3) * PslElement::b(-0.2) * PslElement::a(1.4);
    let f = tri_decompose(&g, FactorOrder::CBA, &tol()).unwrap();
    assert!((f.u - 0.3).abs() < 1e-14 && (f.s + 0.2).abs() < 1e-14 && (f.t - 1.4).abs() < 1e-14);
    let g = PslElement::b(0.3) * PslElement::c(-0.2) * PslElement::a(1.4);
    let f = tri_decompose(&g, FactorOrder::BCA, &tol()).unwrap();
    assert!((f.s - 0.3).abs() < 1e-14 && (f.u + 0.2).abs() < 1e-14 && (f.t - 1.4).abs() < 1e-14);

    // cos(π/4) is far above the pivot tolerance
    let q = PslElement::d(PI / 2.0);
    let f = tri_decompose(&q, FactorOrder::CBA, &tol()).unwrap();
    assert!(f.assemble().mat().max_abs_diff(&q.mat()) < 1e-15);
    assert!(matches!(
        tri_decompose(&PslElement::d(PI), FactorOrder::CBA, &tol()),
        Err(Psl2Error::PivotTooSmall { .. })
    ));
}

#[test]
fn rotation_factor_examples() {
    let f = rotation_factor(0.0, FactorOrder::BCA).unwrap();
    assert_eq!((f.u, f.s, f.t), (0.0, 0.0, 0.0));
    for order in [FactorOrder::BCA, FactorOrder::CBA] {
        let f = rotation_factor(0.2, order).unwrap();
        assert!(f.assemble().mat().max_abs_diff(&PslElement::d(0.2).mat()) < 1e-14);
    }
    assert!(rotation_factor(3.5, FactorOrder::BCA).is_err());
}

#[test]
fn diagonalize_examples() {
    let (g, t) = diagonalize_hyperbolic(&PslElement::a(3.0), &tol()).unwrap();
    assert!((t - 3.0).abs() < 1e-13);
    assert!((g * PslElement::a(3.0) * g.inverse()).approx_eq(&PslElement::a(3.0), &tol()));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let h = random_element(&mut rng, 1.5);
        let gamma = h * PslElement::a(2.0) * h.inverse();
        let (f, t) = diagonalize_hyperbolic(&gamma, &tol()).unwrap();
        assert!((t - 2.0).abs() < 1e-10);
        assert!((f * PslElement::a(t) * f.inverse()).rel_residual(&gamma) < 1e-10);
        assert!((gamma.trace() - 2.0 * (t / 2.0).cosh()).abs() < 1e-12 * gamma.trace());
    }
    assert!(matches!(
        diagonalize_hyperbolic(&PslElement::d(1.0), &tol()),
        Err(Psl2Error::NotHyperbolic(_))
    ));
}

#[test]
fn reference_metric() {
    for t in [-2.0, 0.3, 5.0] {
        assert!((ref_distance(&PslElement::a(t), &PslElement::identity()) - t.abs() / SQRT_2).abs() < 1e-12);
    }
    let g = PslElement::b(0.4) * PslElement::a(0.2);
    assert_eq!(ref_distance(&g, &g), 0.0);
    for k in 0..=200 {
        let s = -1.0 + 2.0 * k as f64 / 200.0;
        assert!(ref_distance(&PslElement::b(s), &PslElement::identity()) <= C_METRIC * s.abs() + 1e-15);
    }
}

#[test]
fn serde_as_array() {
    let g = PslElement::b(0.5);
    let s = serde_json::to_string(&g).unwrap();
    assert_eq!(s, "[1.0,0.5,0.0,1.0]");
    let back: PslElement = serde_json::from_str(&s).unwrap();
    assert_eq!(back, g);
    assert!(serde_json::from_str::<PslElement>("[2.0,0.0,0.0,2.0]").is_err());
}

proptest! {
    #[test]
    fn left_invariance(x in -2.0f64..2.0, t in -2.0f64..2.0, th in -3.0f64..3.0,
                       x2 in -1.0f64..1.0, t2 in -1.0f64..1.0, th2 in -3.0f64..3.0) {
        let k = PslElement::b(x) * PslElement::a(t) * PslElement::d(th);
        let g = PslElement::b(x2) * PslElement::a(t2) * PslElement::d(th2);
        let h = PslElement::a(0.3) * PslElement::c(-0.2);
        let d0 = ref_distance(&g, &h);
        let d1 = ref_distance(&(k * g), &(k * h));
        prop_assert!((d0 - d1).abs() < 1e-9 * (1.0 + d0));
    }

    #[test]
    fn triangle_inequality(a in -1.5f64..1.5, b in -1.5f64..1.5, c in -1.5f64..1.5, th in -3.0f64..3.0) {
        let g = PslElement::a(a) * PslElement::d(th);
        let h = PslElement::b(b);
        let k = PslElement::c(c) * PslElement::a(-a);
        prop_assert!(ref_distance(&g, &k) <= ref_distance(&g, &h) + ref_distance(&h, &k) + 1e-12);
    }

    #[test]
    fn upper_bound_formula(x in -2.0f64..2.0, t in -2.0f64..2.0, th in -3.0f64..3.0) {
        let g = PslElement::b(x) * PslElement::a(t) * PslElement::d(th);
        let want = t.abs() / SQRT_2 + th.abs() / SQRT_2 + x.abs();
        prop_assert!((distance_upper_bound(&g) - want).abs() < 1e-12);
    }

    #[test]
    fn nak_round_trip(x in -3.0f64..3.0, t in -3.0f64..3.0, th in -3.1f64..3.1) {
        let g = PslElement::b(x) * PslElement::a(t) * PslElement::d(th);
        let f = nak_decompose(&g);
        prop_assert!(f.assemble().rel_residual(&g) < 1e-12);
        prop_assert!((f.x - x).abs() < 1e-11 && (f.y.ln() - t).abs() < 1e-11 && (f.theta - th).abs() < 1e-11);
    }

    #[test]
    fn tri_round_trip(u in -2.0f64..2.0, s in -2.0f64..2.0, t in -3.0f64..3.0) {
        let g = PslElement::c(u) * PslElement::b(s) * PslElement::a(t);
        let f = tri_decompose(&g, FactorOrder::CBA, &ToleranceConfig::default()).unwrap();
        prop_assert!((f.u - u).abs() < 1e-10 && (f.s - s).abs() < 1e-10 && (f.t - t).abs() < 1e-10);
    }
}
