//! The Anosov closing lemma in closed form.
//!
//! A near-return `φ_T(x) = Π(g c_u b_s)` with deck element
//! `ζ = g c_u b_s a_{-T} g⁻¹ ∈ Γ` is closed up to the periodic point
//! `x' = Π(g c_σ b_η)` of period `T' = T + 2 ln(1 + su - sσ)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flows::section_solve_in;
use crate::fuchsian::{GroupPresentation, QuotientPoint, Word};
use crate::psl2core::{diagonalize_hyperbolic, ref_distance, Mat2, Psl2Error, PslElement, C_METRIC};

#[derive(Debug, Error)]
pub enum ClosingError {
    #[error("closing needs |u|, |s| < 1/4 and T ≥ 1; got u = {u}, s = {s}, T = {t}")]
    DomainViolation { u: f64, s: f64, t: f64 },
    #[error("φ_T(x) is not Π(x c_u b_s) for any word in the ball")]
    PreconditionFailed,
    #[error("bound {name} violated")]
    BoundViolated { name: String, certificate: Box<ClosingCertificate> },
    #[error(transparent)]
    Psl2(#[from] Psl2Error),
}

fn check_domain(u: f64, s: f64, t: f64) -> Result<(), ClosingError> {
    if u.abs() < 0.25 && s.abs() < 0.25 && t >= 1.0 && t.is_finite() {
        Ok(())
    } else {
        Err(ClosingError::DomainViolation { u, s, t })
    }
}

/// Root of `-s e^T σ² + ((1+su)e^T - 1)σ + u = 0` with `|σ| < 2|u|e^{-T}`.
///
/// Written as `-2u / (B + √Δ)` so nothing cancels.
pub fn solve_sigma(u: f64, s: f64, t: f64) -> Result<f64, ClosingError> {
    check_domain(u, s, t)?;
    Ok(solve_sigma_unchecked(u, s, t))
}

pub(crate) fn solve_sigma_unchecked(u: f64, s: f64, t: f64) -> f64 {
    let et = t.exp();
    if s == 0.0 {
        return u / (1.0 - et);
    }
    let b = (1.0 + s * u) * et - 1.0;
    let disc = b * b + 4.0 * s * u * et;
    -2.0 * u / (b + disc.sqrt())
}

/// Left-hand side of the σ-quadratic.
pub fn sigma_quadratic(u: f64, s: f64, t: f64, sigma: f64) -> f64 {
    let et = t.exp();
    -s * et * sigma * sigma + ((1.0 + s * u) * et - 1.0) * sigma + u
}

/// `σ, η, T'` for a near-return `(u, s)` of duration `T`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ClosingSolution {
    pub sigma: f64,
    pub eta: f64,
    pub t_prime: f64,
    /// `(T'-T)/2 = ln(1 + su - sσ)`, kept apart so it does not drown in `T`.
    pub half_gap: f64,
}

pub(crate) fn closing_solution(u: f64, s: f64, t: f64) -> ClosingSolution {
    let sigma = solve_sigma_unchecked(u, s, t);
    let eta = s / (1.0 + s * u - 2.0 * s * sigma - (-t).exp());
    let half_gap = (s * u - s * sigma).ln_1p();
    ClosingSolution { sigma, eta, t_prime: t + 2.0 * half_gap, half_gap }
}

pub fn close_local(u: f64, s: f64, t: f64) -> Result<ClosingSolution, ClosingError> {
    check_domain(u, s, t)?;
    Ok(closing_solution(u, s, t))
}

/// `‖B_{-η} Â A_{-T} B_η A_{T'} ∓ E‖` with `Â = C_{u-σ} B_s C_{σe^T}`.
pub fn identity_residual(u: f64, s: f64, t: f64, sol: &ClosingSolution) -> f64 {
    let a = |t: f64| Mat2::new((t / 2.0).exp(), 0.0, 0.0, (-t / 2.0).exp());
    let b = |s: f64| Mat2::new(1.0, s, 0.0, 1.0);
    let c = |u: f64| Mat2::new(1.0, 0.0, u, 1.0);
    let hat = c(u - sol.sigma) * b(s) * c(sol.sigma * t.exp());
    let m = b(-sol.eta) * hat * a(-t) * b(sol.eta) * a(sol.t_prime);
    let e = Mat2::IDENTITY;
    m.sub(&e).frobenius().min(m.add(&e).frobenius())
}

/// `2 arccosh(tr/2)`.
pub fn period_from_trace(tr: f64) -> f64 {
    2.0 * (tr.abs() / 2.0).max(1.0).acosh()
}

/// `T'` from `e^{T'/2} + e^{-T'/2} = e^{T/2} + e^{-T/2} + us e^{T/2}`.
pub fn t_prime_arccosh(u: f64, s: f64, t: f64) -> f64 {
    period_from_trace((-t / 2.0).exp() + (1.0 + u * s) * (t / 2.0).exp())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClosingCertificate {
    pub t: f64,
    pub u: f64,
    pub s: f64,
    pub sigma: f64,
    pub eta: f64,
    pub t_prime: f64,
    pub half_gap: f64,
    pub t_prime_arccosh: f64,
    pub t_prime_trace: f64,
    pub base_rep: PslElement,
    pub closed_rep: PslElement,
    pub deck: Word,
    pub residual_identity: f64,
    pub residual_periodicity: f64,
    /// Rounding floor for `residual_periodicity` given the sizes of the factors.
    pub periodicity_floor: f64,
    pub closeness_max_ratio: f64,
    pub quadratic_residual: f64,
    pub bound_checks: BTreeMap<String, bool>,
}

impl ClosingCertificate {
    pub fn all_pass(&self) -> bool {
        self.bound_checks.values().all(|&b| b)
    }

    pub fn closed_point(&self, group: &Arc<GroupPresentation>) -> QuotientPoint {
        QuotientPoint::new(group, self.closed_rep)
    }

    fn first_failure(&self) -> Option<String> {
        self.bound_checks.iter().find(|(_, &v)| !v).map(|(k, _)| k.clone())
    }
}

/// Agreement required between the three routes to `T'`.
pub const T_PRIME_AGREEMENT: f64 = 1e-9;

/// Confirms `φ_T(x) = Π(x c_u b_s)` over the group's default ball, then closes.
pub fn anosov_close(x: &QuotientPoint, t: f64, u: f64, s: f64) -> Result<ClosingCertificate, ClosingError> {
    check_domain(u, s, t)?;
    let ball = x.group.default_ball().map_err(|_| ClosingError::PreconditionFailed)?;
    let y = x.right(&PslElement::a(t));
    let eps = u.abs().max(s.abs()) * 2.0 + 1e-9;
    let coords = section_solve_in(x, &y, eps, 1e-6, &ball).ok_or(ClosingError::PreconditionFailed)?;
    if (coords.u - u).abs() > 1e-8 || (coords.s - s).abs() > 1e-8 || coords.t_star.abs() > 1e-8 {
        return Err(ClosingError::PreconditionFailed);
    }
    let cert = anosov_close_with_deck(&x.group, &x.rep, t, u, s, &coords.gamma)?;
    match cert.first_failure() {
        None => Ok(cert),
        Some(name) => Err(ClosingError::BoundViolated { name, certificate: Box::new(cert) }),
    }
}

/// Closes with a deck element handed over by the caller; every check is
/// recorded in the certificate instead of aborting.
pub fn anosov_close_with_deck(
    group: &GroupPresentation,
    g: &PslElement,
    t: f64,
    u: f64,
    s: f64,
    deck: &Word,
) -> Result<ClosingCertificate, ClosingError> {
    check_domain(u, s, t)?;
    let sol = closing_solution(u, s, t);
    let ClosingSolution { sigma, eta, t_prime, half_gap } = sol;
    let closed = *g * PslElement::c(sigma) * PslElement::b(eta);
    let lhs = deck.element * closed * PslElement::a(t_prime);
    let residual_periodicity = lhs.rel_residual(&closed);
    let floor = 64.0
        * f64::EPSILON
        * deck.element.frobenius()
        * closed.frobenius()
        * closed.inverse().frobenius()
        * PslElement::a(t_prime).frobenius();

    let t_prime_arccosh = t_prime_arccosh(u, s, t);
    let t_prime_trace = period_from_trace(deck.class_trace(group));
    let residual_identity = identity_residual(u, s, t, &sol);
    let quadratic_residual = sigma_quadratic(u, s, t, sigma).abs();

    let us = u * s;
    let n = 256;
    let mut closeness: f64 = 0.0;
    for k in 0..n {
        let tk = t * k as f64 / (n - 1) as f64;
        let at = PslElement::a(tk);
        let d = ref_distance(&at, &(PslElement::c(sigma) * PslElement::b(eta) * at));
        let bound = 2.0 * u.abs() * (tk - t).exp() + 2.0 * s.abs() * (-tk).exp();
        if bound > 0.0 {
            closeness = closeness.max(d / bound);
        } else if d > 0.0 {
            closeness = f64::INFINITY;
        }
    }

    let mut checks = BTreeMap::new();
    let sig_lim = 2.0 * u.abs() * (-t).exp();
    checks.insert("sigma_bound".into(), sigma.abs() < sig_lim || (u == 0.0 && sigma == 0.0));
    checks.insert(
        "eta_bound".into(),
        (eta - s).abs() <= 2.0 * s * s * u.abs() + 2.0 * s.abs() * (-t).exp() + 1e-15,
    );
    let dev = (half_gap - us.ln_1p()).abs();
    checks.insert("log_gap".into(), dev < 5.0 * us.abs() * (-t).exp() || (us == 0.0 && dev == 0.0));
    checks.insert("identity".into(), residual_identity < 1e-9);
    checks.insert("quadratic".into(), quadratic_residual < 1e-12 * t.exp());
    checks.insert("periodicity".into(), residual_periodicity < floor.max(1e-9));
    let agree = (t_prime - t_prime_arccosh).abs() < T_PRIME_AGREEMENT
        && (t_prime - t_prime_trace).abs() < T_PRIME_AGREEMENT
        && (t_prime_arccosh - t_prime_trace).abs() < T_PRIME_AGREEMENT;
    checks.insert("t_prime_agreement".into(), agree);
    let sign_ok = if us < 0.0 {
        half_gap < 0.0 && t_prime < t
    } else if us > 0.0 {
        half_gap > 0.0 && t_prime > t
    } else {
        half_gap == 0.0
    };
    checks.insert("sign_law".into(), sign_ok);
    checks.insert("closeness".into(), closeness <= C_METRIC);

    Ok(ClosingCertificate {
        t,
        u,
        s,
        sigma,
        eta,
        t_prime,
        half_gap,
        t_prime_arccosh,
        t_prime_trace,
        base_rep: *g,
        closed_rep: closed,
        deck: deck.clone(),
        residual_identity,
        residual_periodicity,
        periodicity_floor: floor,
        closeness_max_ratio: closeness,
        quadratic_residual,
        bound_checks: checks,
    })
}

/// A frame `x` with `ζ = x c_u b_s a_{-T} x⁻¹` for a prescribed deck word.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NearReturn {
    pub point: PslElement,
    pub t: f64,
    pub u: f64,
    pub s: f64,
    pub deck: Word,
}

/// Builds a near-return through `deck` with coordinates `(u, s)`. `shift`
/// slides the point along the axis of `deck`.
pub fn near_return(group: &GroupPresentation, deck: &Word, u: f64, s: f64, shift: f64) -> Result<NearReturn, ClosingError> {
    let tol = &group.tolerances;
    let tr = deck.class_trace(group);
    let k = 1.0 + u * s;
    let disc = tr * tr - 4.0 * k;
    if disc <= 0.0 {
        return Err(ClosingError::DomainViolation { u, s, t: f64::NAN });
    }
    let x = (tr + disc.sqrt()) / (2.0 * k);
    let t = 2.0 * x.ln();
    check_domain(u, s, t)?;
    let m = PslElement::c(u) * PslElement::b(s) * PslElement::a(-t);
    let (gm, _) = diagonalize_hyperbolic(&m, tol)?;
    let (fz, _) = diagonalize_hyperbolic(&deck.element, tol)?;
    let point = fz * PslElement::a(shift) * gm.inverse();
    Ok(NearReturn { point, t, u, s, deck: deck.clone() })
}
