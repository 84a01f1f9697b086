//! A closed geodesic traced through the upper half plane, folded back next to
//! `i`, and the flow-reversal symmetry checked along the way.

use geodesic_partners::flows::{geodesic_flow, verify_reversibility};
use geodesic_partners::fuchsian::{builtin_octagon, orbit_from_word, reduce_to_domain, Word};
use geodesic_partners::hyperplane::upsilon_inverse;
use geodesic_partners::PslElement;

fn main() {
    let group = builtin_octagon();
    let w = Word::parse(&group, "1,2").unwrap();
    let orbit = orbit_from_word(&group, &w).unwrap();
    println!("word {w}: period {:.6}, residual {:.2e}", orbit.period, orbit.residual());

    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "t", "x", "y", "vx", "vy");
    let n = 12;
    for k in 0..=n {
        let t = orbit.period * k as f64 / n as f64;
        let (g, _) = reduce_to_domain(&group, &(orbit.frame * PslElement::a(t)));
        let v = upsilon_inverse(&g);
        println!("{t:8.4} {:10.6} {:10.6} {:10.6} {:10.6}", v.base.x, v.base.y, v.v.0, v.v.1);
    }

    let x = orbit.point(&group);
    let y = geodesic_flow(&x, 1.5);
    println!("reversibility over t = 1.5: {}", verify_reversibility(&x, &y, 1.5).unwrap());
}
