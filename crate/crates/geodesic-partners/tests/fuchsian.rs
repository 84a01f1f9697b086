use std::sync::Arc;

use geodesic_partners::fuchsian::*;
use geodesic_partners::psl2core::{classify, random_element, Classification, PslElement, ToleranceConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_generator_group() -> GroupPresentation {
    let g1 = PslElement::a(2.0);
    let g2 = PslElement::d(1.0) * PslElement::a(2.5) * PslElement::d(-1.0);
    GroupPresentation::new("two", vec![g1, g2], vec![], 3, ToleranceConfig::default()).unwrap()
}

#[test]
fn word_ball_sizes() {
    let g = two_generator_group();
    let w0 = enumerate_words(&g, 0).unwrap();
    assert_eq!(w0.len(), 1);
    assert!(w0[0].is_empty());
    assert_eq!(enumerate_words(&g, 1).unwrap().len(), 5);
}

#[test]
fn octagon_ball_against_brute_force() {
    let g = builtin_octagon();
    let words = enumerate_words(&g, 2).unwrap();
    // naive quadratic dedupe over every freely reduced word of length ≤ 2
    let letters: Vec<i32> = (1..=4).flat_map(|k| [k, -k]).collect();
    let mut all = vec![vec![]];
    for &a in &letters {
        all.push(vec![a]);
        for &b in &letters {
            if b != -a {
                all.push(vec![a, b]);
            }
        }
    }
    assert_eq!(all.len(), 1 + 8 + 8 * 7);
    let mut distinct: Vec<PslElement> = vec![];
    for w in &all {
        let e = g.evaluate(w).unwrap();
        if !distinct.iter().any(|d| d.rel_residual(&e) < 1e-9) {
            distinct.push(e);
        }
    }
    assert_eq!(words.len(), distinct.len());
    for w in &words {
        assert!(w.letters.windows(2).all(|p| p[0] != -p[1]));
        assert!(w.element.rel_residual(&g.evaluate(&w.letters).unwrap()) < 1e-12);
    }
}

#[test]
fn budget_is_enforced() {
    let g = builtin_octagon();
    assert!(matches!(enumerate_words(&g, 12), Err(FuchsianError::BudgetExceeded { .. })));
}

#[test]
fn quotient_distance_examples() {
    let g = builtin_octagon();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ball = g.ball(3).unwrap();
    for k in 0..50 {
        let h = random_element(&mut rng, 1.0);
        let x = QuotientPoint::new(&g, h);
        assert!(quotient_distance(&x, &x) < 1e-12);
        let gamma = &ball[(k * 37) % ball.len()];
        let y = x.translate(&gamma.element);
        assert!(quotient_distance(&x, &y) < 1e-9);
        let t = 0.3;
        assert!(quotient_distance(&x, &x.right(&PslElement::a(t))) <= t / std::f64::consts::SQRT_2 + 1e-12);
    }
}

#[test]
fn quotient_distance_is_a_metric_on_samples() {
    let g = builtin_octagon();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let p = QuotientPoint::new(&g, random_element(&mut rng, 1.0));
        let q = QuotientPoint::new(&g, random_element(&mut rng, 1.0));
        let r = QuotientPoint::new(&g, random_element(&mut rng, 1.0));
        let (pq, qp) = (quotient_distance(&p, &q), quotient_distance(&q, &p));
        assert!((pq - qp).abs() < 1e-9);
        assert!(quotient_distance(&p, &r) <= pq + quotient_distance(&q, &r) + 1e-9);
    }
}

#[test]
fn cyclic_group_systole() {
    let g = GroupPresentation::cyclic("a4", PslElement::a(4.0)).unwrap();
    let est = estimate_sigma0_with(&g, 3, 64, 1.0, 1).unwrap();
    assert!((est.systole - 4.0).abs() < 1e-12);
    assert!(est.sigma0 > 0.0);
}

#[test]
fn octagon_sigma0() {
    let g = builtin_octagon();
    let est = estimate_sigma0(&g, 7).unwrap();
    let gen_trace = g.generators[0].trace();
    assert!((est.min_trace - gen_trace).abs() < 1e-9);
    assert!(est.epsilon0 > 0.0);
    assert!(est.sigma0 > 0.0 && est.sigma0 <= est.systole);
}

#[test]
fn octagon_construction() {
    let g = builtin_octagon();
    let want = 2.0 * (1.0 + std::f64::consts::SQRT_2);
    for gen in &g.generators {
        assert!((gen.trace() - want).abs() < 1e-12);
    }
    assert!(g.relation_residual(&OCTAGON_RELATOR).unwrap() < 1e-9);
    let ball = g.ball(6).unwrap();
    for w in ball.iter().filter(|w| !w.is_empty()) {
        assert_eq!(classify(&w.element, &g.tolerances), Classification::Hyperbolic);
        assert!(w.element.trace() >= want - 1e-9);
    }
}

#[test]
fn orbit_periods() {
    let g = builtin_octagon();
    let w = Word::from_letters(&g, &[1]).unwrap();
    let orbit = orbit_from_word(&g, &w).unwrap();
    assert!((orbit.period - octagon_translation_length()).abs() < 1e-12);
    assert!((orbit.period - 2.0 * (1.0 + std::f64::consts::SQRT_2).acosh()).abs() < 1e-14);
    assert!((orbit.period - 3.057).abs() < 1e-3);
    assert!(orbit.residual() < 1e-11);

    let w = Word::from_letters(&g, &[1, 2, -3, 4, 2]).unwrap();
    let base = orbit_from_word(&g, &w).unwrap().period;
    for k in 0..w.len() {
        let rotated = w.rotate(&g, k);
        assert!((orbit_from_word(&g, &rotated).unwrap().period - base).abs() < 1e-12);
    }
    let s = Word::from_letters(&g, &[3, -1]).unwrap();
    let conj = Word::product(&g, &[&s, &w, &s.inverse()]);
    assert!((orbit_from_word(&g, &conj).unwrap().period - base).abs() < 1e-12 * base);

    assert!(matches!(orbit_from_word(&g, &Word::identity()), Err(FuchsianError::TrivialWord)));
}

#[test]
fn constructed_conjugate_has_period_three() {
    let h = PslElement::b(0.4) * PslElement::d(0.7);
    let gamma = h * PslElement::a(3.0) * h.inverse();
    let g = Arc::new(GroupPresentation::cyclic("conj", gamma).unwrap());
    let orbit = orbit_from_word(&g, &Word::from_letters(&g, &[1]).unwrap()).unwrap();
    assert!((orbit.period - 3.0).abs() < 1e-12);
}

#[test]
fn group_file_round_trip() {
    let g = builtin_octagon();
    let text = serde_json::to_string(&g.to_file()).unwrap();
    let back = GroupPresentation::from_json_str(&text, ToleranceConfig::default()).unwrap();
    assert_eq!(back.rank(), 4);
    assert_eq!(back.relations, vec![OCTAGON_RELATOR.to_vec()]);

    let bad = r#"{"name":"x","generators":[[1.0,0.5,0.0,1.0]]}"#;
    assert!(matches!(
        GroupPresentation::from_json_str(bad, ToleranceConfig::default()),
        Err(FuchsianError::GeneratorNotHyperbolic { .. })
    ));
    let bad_rel = r#"{"name":"x","generators":[[2.0,0.0,0.0,0.5]],"relations":[[1]]}"#;
    assert!(matches!(
        GroupPresentation::from_json_str(bad_rel, ToleranceConfig::default()),
        Err(FuchsianError::RelationFails { .. })
    ));
}

#[test]
fn word_parsing() {
    let g = builtin_octagon();
    let w = Word::parse(&g, "1,-2,3").unwrap();
    assert_eq!(w.letters, vec![1, -2, 3]);
    assert_eq!(Word::from_letters(&g, &[1, 2, -2, 3]).unwrap().letters, vec![1, 3]);
    assert!(Word::parse(&g, "1,9").is_err());
}
