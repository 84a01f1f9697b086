//! The doubled orbit: once around the original, once around its partner.

use geodesic_partners::fuchsian::builtin_octagon;
use geodesic_partners::partner::{construct_partner, reconnect_double, search_crossings, AngleKind, EncounterInputs};

fn main() {
    let group = builtin_octagon();
    let inputs = EncounterInputs::from_group(&group, 7).unwrap();
    let hits = search_crossings(&group, 0.2, AngleKind::Phi, 0.2, &[1, 2], 2, 3, &|_, e| e.loop_inequality).unwrap();
    for h in hits {
        let p = construct_partner(&group, &h.orbit, &h.crossing, &inputs).unwrap();
        let r = reconnect_double(&group, &p).unwrap();
        println!("orbit {}: T = {:.8}, T' = {:.8}", h.orbit.word, h.orbit.period, p.t_prime);
        println!("  T̂ = {:.10}, from trace {:.10}", r.t_hat, r.t_hat_trace);
        println!("  bound ratios {:.3} (T + T'), {:.3} (2T)", r.ratio_sum, r.ratio_double);
        println!("  closeness {:.2e} / {:.2e} against {:.2e}", r.closeness_original, r.closeness_partner, 5.0 * r.eps_hat * geodesic_partners::C_METRIC);
    }
}
