//! Partner orbits: search the octagon group for small-angle
//! crossings and certify the partner orbit of each.

use geodesic_partners::fuchsian::builtin_octagon;
use geodesic_partners::partner::{check_uniqueness, construct_partner, search_crossings, AngleKind, EncounterInputs};

fn main() {
    let group = builtin_octagon();
    let inputs = EncounterInputs::from_group(&group, 7).unwrap();
    println!("ε* = {:.4}, φ₀ = {:.5}", inputs.eps_star(), inputs.phi0());

    let hits = search_crossings(&group, 0.1, AngleKind::Phi, 0.2, &[1, 2, 3], 2, 4, &|_, e| e.loop_inequality).unwrap();
    for h in &hits {
        let cert = construct_partner(&group, &h.orbit, &h.crossing, &inputs).unwrap();
        println!("orbit {} (T = {:.6}), φ = {:.4}", h.orbit.word, h.orbit.period, cert.phi);
        println!("  T₁ = {:.4}, T₂ = {:.4}", cert.frame.t1, cert.frame.t2);
        println!("  partner {} with T' = {:.10}", cert.partner.word, cert.t_prime);
        println!(
            "  T' - T = {:+.4e}, bound ratio {:.3}, closeness {:.4} ≤ {:.4}",
            cert.action_difference,
            cert.action_bound_ratio,
            cert.closeness_max_observed,
            cert.closeness_bound * geodesic_partners::C_METRIC
        );
        println!("  all checks: {}, same as itself: {}", cert.all_pass(), check_uniqueness(&group, &cert, &cert));
    }
}
