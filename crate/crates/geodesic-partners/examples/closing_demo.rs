//! Anosov closing: a near-return with section coordinates (u, s) is closed up
//! to a periodic point, and the three routes to the new period agree.

use geodesic_partners::closing::{anosov_close, near_return};
use geodesic_partners::fuchsian::{builtin_octagon, QuotientPoint, Word};

fn main() {
    let group = builtin_octagon();
    let deck = Word::parse(&group, "1,2").unwrap();
    for (u, s) in [(0.05, -0.08), (0.05, 0.08), (0.0, 0.1)] {
        let nr = near_return(&group, &deck, u, s, 0.3).unwrap();
        let x = QuotientPoint::new(&group, nr.point);
        let cert = anosov_close(&x, nr.t, u, s).expect("all bounds hold");
        println!("u = {u:+.2}, s = {s:+.2}, T = {:.10}", cert.t);
        println!("  σ = {:+.3e}, η = {:+.6}", cert.sigma, cert.eta);
        println!(
            "  T' = {:.12} (log) {:.12} (arccosh) {:.12} (trace)",
            cert.t_prime, cert.t_prime_arccosh, cert.t_prime_trace
        );
        println!(
            "  identity {:.1e}, periodicity {:.1e}, closeness ratio {:.3}",
            cert.residual_identity, cert.residual_periodicity, cert.closeness_max_ratio
        );
    }
}
