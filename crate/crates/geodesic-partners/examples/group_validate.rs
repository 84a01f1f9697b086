//! The genus-2 octagon group: relator, systole, trace gap and the sampled
//! injectivity constant.

use geodesic_partners::fuchsian::{builtin_octagon, estimate_sigma0, OCTAGON_RELATOR};

fn main() {
    let group = builtin_octagon();
    println!("{} generators", group.rank());
    println!("relator residual {:.2e}", group.relation_residual(&OCTAGON_RELATOR).unwrap());
    for len in [2, 4] {
        println!("ball of radius {len}: {} distinct elements", group.ball(len).unwrap().len());
    }
    let est = estimate_sigma0(&group, 7).unwrap();
    println!("systole {:.6}", est.systole);
    println!("ε₀ = min tr - 2 = {:.6}", est.epsilon0);
    println!("σ₀ ≈ {:.6} ({} frames, words ≤ {})", est.sigma0, est.frames, est.word_len);
}
