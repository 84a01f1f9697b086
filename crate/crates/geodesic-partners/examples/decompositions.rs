//! The charts of PSL(2,ℝ): Iwasawa (NAK), the two triangular orders, and the
//! closed-form factors of a rotation.

use geodesic_partners::psl2core::{
    nak_decompose, rotation_factor, tri_decompose, FactorOrder, PslElement, ToleranceConfig,
};

fn main() {
    let tol = ToleranceConfig::default();
    let g = PslElement::b(0.7) * PslElement::a(1.3) * PslElement::d(0.4);
    println!("g = {g}");

    let nak = nak_decompose(&g);
    println!("NAK: x = {:.6}, y = {:.6}, θ = {:.6}", nak.x, nak.y, nak.theta);
    println!("  reassembly residual {:.2e}", nak.assemble().rel_residual(&g));

    for order in [FactorOrder::CBA, FactorOrder::BCA] {
        let f = tri_decompose(&g, order, &tol).expect("pivot is far from zero");
        println!(
            "{order:?}: u = {:.6}, s = {:.6}, t = {:.6}  residual {:.2e}",
            f.u,
            f.s,
            f.t,
            f.assemble().rel_residual(&g)
        );
    }

    let phi = 0.1;
    let r = rotation_factor(phi, FactorOrder::BCA).unwrap();
    println!(
        "d_{phi} = b_{:.6} c_{:.6} a_{:.6}, error {:.2e}",
        r.s,
        r.u,
        r.t,
        r.assemble().mat().max_abs_diff(&PslElement::d(phi).mat())
    );
}
