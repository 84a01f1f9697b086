//! Geodesic and horocycle flows on `Γ\PSL(2,ℝ)`, Poincaré sections, shadowing
//! and reversibility checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuchsian::{quotient_distance, QuotientPoint, Word};
use crate::hyperplane::reverse;
use crate::psl2core::{ref_distance, tri_decompose, FactorOrder, PslElement, C_METRIC};

pub fn geodesic_flow(x: &QuotientPoint, t: f64) -> QuotientPoint {
    x.right(&PslElement::a(t))
}

/// Stable horocycle flow `θ_s`.
pub fn horocycle_flow(x: &QuotientPoint, s: f64) -> QuotientPoint {
    x.right(&PslElement::b(s))
}

/// Unstable horocycle flow `η_u`.
pub fn conj_horocycle_flow(x: &QuotientPoint, u: f64) -> QuotientPoint {
    x.right(&PslElement::c(u))
}

/// `φ_{-t*}(y) = Π(rep_x c_u b_s)` with `γ⁻¹ rep_x c_u b_s a_{t*} = rep_y`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectionCoords {
    pub u: f64,
    pub s: f64,
    pub gamma: Word,
    pub t_star: f64,
    /// Relative residual of the reassembly.
    pub residual: f64,
}

/// Searches the group's default ball.
pub fn section_solve(x: &QuotientPoint, y: &QuotientPoint, eps: f64, search_time: f64) -> Option<SectionCoords> {
    let ball = x.group.default_ball().ok()?;
    section_solve_in(x, y, eps, search_time, &ball)
}

/// Section membership over an explicit candidate set.
pub fn section_solve_in(
    x: &QuotientPoint,
    y: &QuotientPoint,
    eps: f64,
    search_time: f64,
    candidates: &[Word],
) -> Option<SectionCoords> {
    let tol = &x.group.tolerances;
    let xinv = x.rep.inverse();
    let mut best: Option<SectionCoords> = None;
    for w in candidates {
        let m = xinv * w.element * y.rep;
        let a11 = m.mat().a;
        if a11.abs() <= tol.pivot_tol {
            continue;
        }
        let t_star = 2.0 * a11.abs().ln();
        if t_star.abs() > search_time {
            continue;
        }
        let Ok(f) = tri_decompose(&(m * PslElement::a(-t_star)), FactorOrder::CBA, tol) else {
            continue;
        };
        if f.u.abs() >= eps || f.s.abs() >= eps {
            continue;
        }
        if best.as_ref().map_or(true, |b| f.u.abs() + f.s.abs() < b.u.abs() + b.s.abs()) {
            let rebuilt = w.element.inverse() * x.rep * PslElement::c(f.u) * PslElement::b(f.s) * PslElement::a(t_star);
            best = Some(SectionCoords {
                u: f.u,
                s: f.s,
                gamma: w.clone(),
                t_star,
                residual: rebuilt.rel_residual(&y.rep),
            });
        }
    }
    best
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("witness does not reproduce the point: residual {0:e}")]
    WitnessInvalid(f64),
    #[error("premise fails: φ_t(x) differs from y by {0:e}")]
    PremiseFailed(f64),
}

/// `x = Π(g₁ b_s) = Π(g₂ c_u)`: the point lies on the stable leaf of `x₁` and
/// the unstable leaf of `x₂`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ShadowWitness {
    pub s: f64,
    pub u: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShadowingReport {
    pub forward_max_ratio: f64,
    pub backward_max_ratio: f64,
    pub samples: usize,
    pub holds: bool,
}

/// Samples `d̂(φ_t x₁, φ_t x)` against `C·ε e^{-t}` for `t ∈ [0, horizon]` and
/// `d̂(φ_t x₂, φ_t x)` against `C·ε e^{t}` for `t ∈ [-horizon, 0]`.
///
/// Representatives are compared directly, which bounds the quotient distance
/// from above.
pub fn verify_shadowing(
    x1: &QuotientPoint,
    x2: &QuotientPoint,
    x: &QuotientPoint,
    witness: ShadowWitness,
    eps: f64,
    horizon: f64,
    n_samples: usize,
) -> Result<ShadowingReport, FlowError> {
    let g = x.rep;
    let r1 = (x1.rep * PslElement::b(witness.s)).rel_residual(&g);
    let r2 = (x2.rep * PslElement::c(witness.u)).rel_residual(&g);
    let tol = x.group.tolerances.eq_tol * 10.0;
    if r1 > tol || r2 > tol {
        return Err(FlowError::WitnessInvalid(r1.max(r2)));
    }
    let n = n_samples.max(2);
    let mut fwd: f64 = 0.0;
    let mut bwd: f64 = 0.0;
    for k in 0..n {
        let t = horizon * k as f64 / (n - 1) as f64;
        // left invariance: d̂(g₁ a_t, g₁ b_s a_t) = d̂(e, a_{-t} b_s a_t)
        let df = ref_distance(&PslElement::a(t), &(PslElement::b(witness.s) * PslElement::a(t)));
        let db = ref_distance(&PslElement::a(-t), &(PslElement::c(witness.u) * PslElement::a(-t)));
        fwd = fwd.max(df / (eps * (-t).exp()));
        bwd = bwd.max(db / (eps * (-t).exp()));
    }
    Ok(ShadowingReport {
        forward_max_ratio: fwd,
        backward_max_ratio: bwd,
        samples: n,
        holds: fwd <= C_METRIC && bwd <= C_METRIC,
    })
}

/// Random witnesses with `|s|, |u| < eps` from frames near `x1`.
pub fn random_shadowing_runs(
    x1: &QuotientPoint,
    eps: f64,
    horizon: f64,
    runs: usize,
    seed: u64,
) -> Vec<ShadowingReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..runs)
        .map(|_| {
            let s = rng.gen_range(-eps..eps);
            let u = rng.gen_range(-eps..eps);
            let x = x1.right(&PslElement::b(s));
            let x2 = x.right(&PslElement::c(-u));
            verify_shadowing(x1, &x2, &x, ShadowWitness { s, u }, eps, horizon, 256)
                .expect("witness built by construction")
        })
        .collect()
}

/// Checks `φ_t(y') = x'` given `φ_t(x) = y`.
pub fn verify_reversibility(x: &QuotientPoint, y: &QuotientPoint, t: f64) -> Result<bool, FlowError> {
    let fx = geodesic_flow(x, t);
    let premise = quotient_distance(&fx, y);
    let scale = fx.rep.frobenius().max(y.rep.frobenius()).max(1.0);
    let tol = x.group.tolerances.eq_tol * scale * 10.0;
    if premise > tol {
        return Err(FlowError::PremiseFailed(premise));
    }
    let yr = QuotientPoint::new(&y.group, reverse(&y.rep));
    let xr = QuotientPoint::new(&x.group, reverse(&x.rep));
    let lhs = geodesic_flow(&yr, t);
    Ok(quotient_distance(&lhs, &xr) <= tol)
}
