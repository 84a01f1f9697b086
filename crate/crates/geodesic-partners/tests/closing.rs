use geodesic_partners::closing::*;
use geodesic_partners::fuchsian::*;
use geodesic_partners::psl2core::PslElement;

/// Bisection on the σ-quadratic over the interval the root must lie in.
fn bisect_sigma(u: f64, s: f64, t: f64) -> f64 {
    let r = 2.0 * u.abs() * (-t).exp();
    let (mut lo, mut hi) = (-r, r);
    let f = |x: f64| sigma_quadratic(u, s, t, x);
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn sigma_examples() {
    for (u, t) in [(0.1, 2.0), (-0.2, 5.0), (0.01, 1.0)] {
        let sigma = solve_sigma(u, 0.0, t).unwrap();
        assert!((sigma - u / (1.0 - f64::exp(t))).abs() < 1e-17);
    }
    assert_eq!(solve_sigma(0.0, 0.2, 3.0).unwrap(), 0.0);

    let sigma = solve_sigma(0.1, 0.1, 2.0).unwrap();
    assert!(sigma_quadratic(0.1, 0.1, 2.0, sigma).abs() < 1e-12 * 2f64.exp());
    assert!(sigma.abs() < 2.0 * 0.1 * (-2f64).exp());
    assert!((sigma - bisect_sigma(0.1, 0.1, 2.0)).abs() < 1e-15);

    for (u, s, t) in [(0.2, -0.24, 1.0), (-0.1, 0.2, 8.0), (0.24, 0.24, 30.0)] {
        let sigma = solve_sigma(u, s, t).unwrap();
        assert!((sigma - bisect_sigma(u, s, t)).abs() < 1e-14 * (1.0 + sigma.abs()));
    }
    assert!(matches!(solve_sigma(0.3, 0.0, 2.0), Err(ClosingError::DomainViolation { .. })));
    assert!(matches!(solve_sigma(0.1, 0.0, 0.5), Err(ClosingError::DomainViolation { .. })));
}

#[test]
fn trivial_closing_is_identity() {
    let g = builtin_octagon();
    let w = Word::from_letters(&g, &[1, 2]).unwrap();
    let orbit = orbit_from_word(&g, &w).unwrap();
    let cert = anosov_close(&orbit.point(&g), orbit.period, 0.0, 0.0).unwrap();
    assert_eq!((cert.sigma, cert.eta), (0.0, 0.0));
    assert_eq!(cert.t_prime, orbit.period);
    assert!(cert.closed_rep.rel_residual(&orbit.frame) < 1e-15);
    assert!(cert.all_pass());
}

#[test]
fn sign_law() {
    let g = builtin_octagon();
    let deck = Word::from_letters(&g, &[1, 2]).unwrap();
    for (u, s) in [(0.05, 0.08), (0.05, -0.08), (-0.1, 0.02), (-0.1, -0.2)] {
        let nr = near_return(&g, &deck, u, s, 0.3).unwrap();
        let cert = anosov_close(&QuotientPoint::new(&g, nr.point), nr.t, u, s).unwrap();
        if u * s > 0.0 {
            assert!(cert.t_prime > nr.t);
        } else {
            assert!(cert.t_prime < nr.t);
        }
        assert!(cert.residual_identity < 1e-9);
        assert!(cert.all_pass(), "{:?}", cert.bound_checks);
    }
}

#[test]
fn log_and_arccosh_routes_agree() {
    let g = builtin_octagon();
    for letters in [vec![1], vec![1, 2], vec![1, -3, 2, 4]] {
        let deck = Word::from_letters(&g, &letters).unwrap();
        let nr = near_return(&g, &deck, 0.05, -0.08, 0.0).unwrap();
        let sol = close_local(0.05, -0.08, nr.t).unwrap();
        assert!((sol.t_prime - t_prime_arccosh(0.05, -0.08, nr.t)).abs() < 1e-10);
        let cert = anosov_close(&QuotientPoint::new(&g, nr.point), nr.t, 0.05, -0.08).unwrap();
        // the closed orbit is the deck's own closed geodesic
        assert!((cert.t_prime - orbit_from_word(&g, &deck).unwrap().period).abs() < 1e-9);
        // tr(ζ) = e^{T/2} + e^{-T/2} + us e^{T/2}
        let tr = (nr.t / 2.0).exp() + (-nr.t / 2.0).exp() + 0.05 * -0.08 * (nr.t / 2.0).exp();
        assert!((deck.element.trace() - tr).abs() < 1e-10 * tr);
    }
}

#[test]
fn t_prime_increases_with_us() {
    let t = 4.0;
    let h = 1e-4;
    for us in [-0.01, 0.0, 0.01] {
        let u = 0.1;
        let lo = close_local(u, (us - h) / u, t).unwrap().t_prime;
        let hi = close_local(u, (us + h) / u, t).unwrap().t_prime;
        assert!(hi > lo);
    }
}

#[test]
fn missing_deck_is_reported() {
    let g = builtin_octagon();
    let x = QuotientPoint::new(&g, PslElement::b(0.3));
    assert!(matches!(anosov_close(&x, 2.0, 0.05, 0.05), Err(ClosingError::PreconditionFailed)));
}
