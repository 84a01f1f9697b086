//! Self-crossings of a closed geodesic, and a crossing placed by hand on the
//! axis of a generator.

use geodesic_partners::fuchsian::{builtin_octagon, orbit_from_word, PeriodicOrbit, Word};
use geodesic_partners::partner::{build_crossing_with_angle, find_crossings, find_crossings_in};

fn main() {
    let group = builtin_octagon();
    let w = Word::parse(&group, "1,2,1,3,1,-3,-1,-2").unwrap();
    let orbit = orbit_from_word(&group, &w).unwrap();
    println!("orbit {w}, period {:.6}", orbit.period);
    for e in find_crossings(&group, &orbit, 2).unwrap() {
        println!(
            "  τ = {:8.4}  L = {:8.4}  θ = {:.6}  {:?}  via {}  (trace identity {:.1e})",
            e.tau, e.l, e.theta, e.orientation, e.conjugator, e.trace_identity_residual
        );
    }

    let gamma = Word::parse(&group, "1").unwrap();
    let theta = std::f64::consts::FRAC_PI_2;
    let c = build_crossing_with_angle(&group, &gamma, theta).unwrap();
    println!("built: L = {:.6}, det K = {:.15}, residual {:.1e}", c.l, c.det_k, c.residual);
    let probe = PeriodicOrbit { word: gamma.clone(), frame: c.frame, period: c.l + 1.0 };
    for e in find_crossings_in(&group, &probe, &[gamma.inverse()]) {
        println!("recovered: θ = {:.12} (asked {theta:.12}), L = {:.6}", e.theta, e.l);
    }
}
