//! Pseudo-partners: at a crossing with small θ the two loops close up
//! separately, and their periods add to about T + 2 ln cos²(θ/2).

use geodesic_partners::fuchsian::builtin_octagon;
use geodesic_partners::partner::{construct_pseudo_partner, search_crossings, AngleKind};

fn main() {
    let group = builtin_octagon();
    let accept = |o: &geodesic_partners::fuchsian::PeriodicOrbit, e: &geodesic_partners::partner::CrossingEvent| {
        e.l >= 1.0 && o.period - e.l >= 1.0
    };
    for theta in [0.1, 0.2] {
        let hits = search_crossings(&group, theta, AngleKind::Theta, 0.2, &[1, 2, 3], 2, 2, &accept).unwrap();
        for h in hits {
            let c = construct_pseudo_partner(&group, &h.orbit, &h.crossing).unwrap();
            println!("orbit {} (T = {:.6}), θ = {:.4}", h.orbit.word, h.orbit.period, h.crossing.theta);
            println!("  loop 1: {} T₁' = {:.6} (T₁ = {:.6})", c.orbit1.word, c.orbit1.period, c.frame.t1);
            println!("  loop 2: {} T₂' = {:.6} (T₂ = {:.6})", c.orbit2.word, c.orbit2.period, c.frame.t2);
            println!(
                "  total {:.6}, bound ratio {:.3}, chain (u, s) = ({:+.2e}, {:+.2e}) with ε = {:.3}",
                c.total_period, c.total_period_ratio, c.chain_u, c.chain_s, c.chain_eps
            );
        }
    }
}
