//! Self-crossings of closed geodesics and the orbits obtained by switching
//! connections at a crossing: partners, pseudo-partners and
//! the doubled reconnection.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closing::{
    anosov_close_with_deck, period_from_trace, ClosingCertificate, ClosingError,
};
use crate::flows::section_solve_in;
use crate::fuchsian::{
    estimate_sigma0, orbit_from_word, quotient_distance_in, reduce_to_domain, FuchsianError,
    GroupPresentation, PeriodicOrbit, QuotientPoint, Word,
};
use crate::psl2core::{
    ref_distance, rotation_factor, tri_decompose, FactorOrder, Psl2Error, PslElement,
    ToleranceConfig, C_METRIC,
};

#[derive(Debug, Error)]
pub enum PartnerError {
    #[error("φ = {0} is not below 1/3")]
    AngleTooLarge(f64),
    #[error("period {0} is below 1")]
    PeriodTooShort(f64),
    #[error("section coordinates disagree with the closed form by {0:e}")]
    SectionMismatch(f64),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("θ = {0} outside (0, π)")]
    AngleOutOfRange(f64),
    #[error(transparent)]
    Closing(#[from] ClosingError),
    #[error(transparent)]
    Group(#[from] FuchsianError),
    #[error(transparent)]
    Psl2(#[from] Psl2Error),
}

/// Which rotation appears in `g a_{τ+L} = γ g a_τ d_{±θ}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Orientation {
    Plus,
    Minus,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Plus => 1.0,
            Orientation::Minus => -1.0,
        }
    }
}

/// `g a_{τ+L} = γ g a_τ d_{εθ}` with `g` the orbit frame and `ε` the orientation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub tau: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub theta: f64,
    pub conjugator: Word,
    pub orientation: Orientation,
    /// Relative residual of the defining relation.
    pub residual: f64,
    /// `|tr γ - 2cosh(L/2)cos(θ/2)| / tr γ`.
    pub trace_identity_residual: f64,
    /// `e^{-L} < cos²(θ/2)`.
    pub loop_inequality: bool,
}

impl CrossingEvent {
    /// `π - θ`.
    pub fn phi(&self) -> f64 {
        PI - self.theta
    }

    /// `ρ = 2 arccosh(tr γ / 2)`, the length of the conjugator's closed geodesic.
    pub fn rho(&self, group: &GroupPresentation) -> f64 {
        period_from_trace(self.conjugator.class_trace(group))
    }
}

/// Closed-form crossing data read off `M = g⁻¹ γ g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawCrossing {
    pub tau: f64,
    pub l: f64,
    pub theta: f64,
    pub orientation: Orientation,
}

/// Solves `a_{-τ} M⁻¹ a_{τ+L} = d_{±θ}`; `None` when `M` is not of that shape.
pub fn extract_crossing(frame: &PslElement, gamma: &PslElement) -> Option<RawCrossing> {
    let mut m = (frame.inverse() * *gamma * *frame).mat();
    if m.a < 0.0 {
        m = m.neg();
    }
    let p = m.a * m.d;
    let q = m.b * m.c;
    if !(p > 0.0 && p < 1.0 && q < 0.0) {
        return None;
    }
    let l = (m.a / m.d).ln();
    if !(l > 0.0) {
        return None;
    }
    let theta = 2.0 * p.sqrt().acos();
    let tau = ((-m.b / m.c).ln() - l) / 2.0;
    let orientation = if m.b < 0.0 { Orientation::Plus } else { Orientation::Minus };
    Some(RawCrossing { tau, l, theta, orientation })
}

fn crossing_residual(frame: &PslElement, gamma: &PslElement, c: &RawCrossing) -> f64 {
    let lhs = *frame * PslElement::a(c.tau + c.l);
    let rhs = *gamma * *frame * PslElement::a(c.tau) * PslElement::d(c.orientation.sign() * c.theta);
    lhs.rel_residual(&rhs)
}

fn event_from_raw(group: &GroupPresentation, frame: &PslElement, raw: RawCrossing, conjugator: Word) -> CrossingEvent {
    let residual = crossing_residual(frame, &conjugator.element, &raw);
    let tr = conjugator.class_trace(group);
    let (half_t, half_c) = ((raw.l / 2.0).cosh(), (raw.theta / 2.0).cos());
    CrossingEvent {
        tau: raw.tau,
        l: raw.l,
        theta: raw.theta,
        conjugator,
        orientation: raw.orientation,
        residual,
        trace_identity_residual: (tr - 2.0 * half_t * half_c).abs() / tr,
        loop_inequality: (-raw.l).exp() < half_c * half_c,
    }
}

/// Tolerance on `(τ, L)` below which two events are the same crossing.
pub const CROSSING_DEDUP_TOL: f64 = 1e-6;

/// Crossings detected with conjugators of length ≤ `max_conj_len`.
pub fn find_crossings(
    group: &GroupPresentation,
    orbit: &PeriodicOrbit,
    max_conj_len: usize,
) -> Result<Vec<CrossingEvent>, PartnerError> {
    let ball = group.ball(max_conj_len)?;
    Ok(find_crossings_in(group, orbit, &ball))
}

/// Crossings detected with an explicit set of conjugators. `τ` is normalized
/// to `[0, T)` and the conjugator moved accordingly, so the reported relation
/// holds as stated.
pub fn find_crossings_in(group: &GroupPresentation, orbit: &PeriodicOrbit, words: &[Word]) -> Vec<CrossingEvent> {
    let f = orbit.frame;
    let t = orbit.period;
    let raw: Vec<(RawCrossing, usize)> = words
        .par_iter()
        .enumerate()
        .filter(|(_, w)| !w.is_empty())
        .filter_map(|(k, w)| extract_crossing(&f, &w.element).map(|c| (c, k)))
        .filter(|(c, _)| c.l < t - 1e-9)
        .collect();
    let mut events: Vec<CrossingEvent> = raw
        .into_iter()
        .map(|(mut c, k)| {
            let shift = (c.tau / t).floor();
            c.tau -= shift * t;
            let n = shift as i64;
            let conj = if n == 0 {
                words[k].clone()
            } else {
                let p = orbit.word.pow(group, n);
                Word::product(group, &[&p.inverse(), &words[k], &p])
            };
            event_from_raw(group, &f, c, conj)
        })
        .collect();
    events.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.l.total_cmp(&b.l)));
    let mut kept: Vec<CrossingEvent> = Vec::new();
    'outer: for e in events {
        for k in kept.iter_mut() {
            let dt = (k.tau - e.tau).abs();
            let dt = dt.min((t - dt).abs());
            if dt < CROSSING_DEDUP_TOL && (k.l - e.l).abs() < CROSSING_DEDUP_TOL {
                if e.conjugator.len() < k.conjugator.len() {
                    *k = e;
                }
                continue 'outer;
            }
        }
        kept.push(e);
    }
    kept.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.l.total_cmp(&b.l)));
    kept
}

/// A frame `g` with `γ g a_L = g d_θ`, the loop length `L` and `det K`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstructedCrossing {
    pub frame: PslElement,
    #[serde(rename = "L")]
    pub l: f64,
    pub det_k: f64,
    pub residual: f64,
}

/// Places a crossing of angle `θ` on the axis of `γ`; the loop length solves
/// `cosh(l(γ)/2) = cosh(L/2) cos(θ/2)`.
pub fn build_crossing_with_angle(
    group: &GroupPresentation,
    gamma: &Word,
    theta: f64,
) -> Result<ConstructedCrossing, PartnerError> {
    if !(theta > 0.0 && theta < PI) {
        return Err(PartnerError::AngleOutOfRange(theta));
    }
    let orbit = orbit_from_word(group, gamma)?;
    let len = orbit.period;
    let (sn, cs) = (theta / 2.0).sin_cos();
    let l = 2.0 * ((len / 2.0).cosh() / cs).acosh();
    let el = (-l / 2.0).exp();
    let a = el * sn;
    let b = el * cs - (len / 2.0).exp();
    let c = 1.0 / ((len / 2.0).exp() - (-len / 2.0).exp());
    let d = c * (el * cs - (-len / 2.0).exp()) / (el * sn);
    let k = crate::psl2core::Mat2::new(a, b, c, d);
    let det_k = k.det();
    let kk = PslElement::normalized(k).ok_or(PartnerError::AngleOutOfRange(theta))?;
    let frame = orbit.frame * kk;
    let lhs = gamma.element * frame * PslElement::a(l);
    let rhs = frame * PslElement::d(theta);
    Ok(ConstructedCrossing { frame, l, det_k, residual: lhs.rel_residual(&rhs) })
}

/// Crossing data split into its two loops: `g a_{T₁} = γ₁ h`,
/// `h a_{T₂} = γ₂ g` with `h = g d_{κθ}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossingFrame {
    pub g: PslElement,
    pub h: PslElement,
    pub t1: f64,
    pub t2: f64,
    pub w1: Word,
    pub w2: Word,
    /// `w₁w₂`, the orbit seen from `g`.
    pub w0: Word,
    pub theta: f64,
    /// Whether the roles of the two branches were exchanged.
    pub swapped: bool,
    pub residual_first: f64,
    pub residual_second: f64,
}

/// Puts the crossing into the form with `h = g d_{κθ}`, `κ = want.sign()`.
pub fn crossing_frame(
    group: &GroupPresentation,
    orbit: &PeriodicOrbit,
    crossing: &CrossingEvent,
    want: Orientation,
) -> CrossingFrame {
    let t = orbit.period;
    let theta = crossing.theta;
    // work from the lift with τ ∈ [-T/2, T/2): the frame stays near the
    // axis' foot and the conjugator shrinks back by free reduction
    let (tau, conj) = if crossing.tau > t / 2.0 {
        let c = Word::product(group, &[&orbit.word.inverse(), &crossing.conjugator, &orbit.word]);
        (crossing.tau - t, c)
    } else {
        (crossing.tau, crossing.conjugator.clone())
    };
    let conj = &conj;
    let gc = orbit.frame * PslElement::a(tau);
    let rest = Word::product(group, &[&conj.inverse(), &orbit.word]);
    let (g, t1, w1, w2, swapped) = if crossing.orientation == want {
        (gc, crossing.l, conj.clone(), rest, false)
    } else {
        let g = gc * PslElement::d(crossing.orientation.sign() * theta);
        (g, t - crossing.l, rest, conj.clone(), true)
    };
    let h = g * PslElement::d(want.sign() * theta);
    let t2 = t - t1;
    let w0 = Word::product(group, &[&w1, &w2]);
    let residual_first = (g * PslElement::a(t1)).rel_residual(&(w1.element * h));
    let residual_second = (h * PslElement::a(t2)).rel_residual(&(w2.element * g));
    CrossingFrame { g, h, t1, t2, w1, w2, w0, theta, swapped, residual_first, residual_second }
}

/// Inputs for the uniqueness radius and the encounter region.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EncounterInputs {
    /// Sampled injectivity constant.
    pub sigma0: f64,
    /// Declared, not derived.
    pub sigma1: f64,
}

impl EncounterInputs {
    pub fn new(sigma0: f64) -> Self {
        EncounterInputs { sigma0, sigma1: 0.25 }
    }

    pub fn from_group(group: &GroupPresentation, seed: u64) -> Result<Self, PartnerError> {
        Ok(Self::new(estimate_sigma0(group, seed)?.sigma0))
    }

    /// `ε* = min(σ₀/6, σ₁/2)`.
    pub fn eps_star(&self) -> f64 {
        (self.sigma0 / 6.0).min(self.sigma1 / 2.0)
    }

    /// `φ₀ = min(1/3, ε*/9)`.
    pub fn phi0(&self) -> f64 {
        (1.0f64 / 3.0).min(self.eps_star() / 9.0)
    }

    /// `ϱ = ε*/12`.
    pub fn varrho(&self) -> f64 {
        self.eps_star() / 12.0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Encounter {
    pub varrho: f64,
    pub t_s: f64,
    pub t_u: f64,
    pub t_enc: f64,
    /// `φ < φ₀`, where the lower bound is claimed.
    pub in_regime: bool,
    /// `t_enc > ln(9/4)`.
    pub lower_bound: bool,
}

pub fn encounter(phi: f64, inputs: &EncounterInputs) -> Encounter {
    let varrho = inputs.varrho();
    let (sn, cs) = (phi / 2.0).sin_cos();
    let t_s = (varrho / (sn / cs)).ln();
    let t_u = (varrho / (sn * cs)).ln();
    let t_enc = t_s + t_u;
    Encounter {
        varrho,
        t_s,
        t_u,
        t_enc,
        in_regime: phi < inputs.phi0(),
        lower_bound: t_enc > (9.0f64 / 4.0).ln(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartnerCertificate {
    pub original: PeriodicOrbit,
    pub crossing: CrossingEvent,
    pub frame: CrossingFrame,
    pub phi: f64,
    /// `d_φ = b_s c_u a_τ`.
    pub s: f64,
    pub u: f64,
    pub tau_rot: f64,
    pub u_hat: f64,
    pub s_hat: f64,
    pub section_deviation: f64,
    /// Relative residual of `w₂·x = ĝ` and `w₁·y = ĝ a_T` for the translated representatives.
    pub translate_residual: f64,
    /// `ζ = γ₂γ₁⁻¹`, the deck element of the near-return at `ĝ`.
    pub deck: Word,
    pub closing: ClosingCertificate,
    pub partner: PeriodicOrbit,
    pub partner_point: PslElement,
    #[serde(rename = "T_prime")]
    pub t_prime: f64,
    pub t_prime_closed_form: f64,
    pub action_difference: f64,
    pub action_bound: bool,
    pub action_bound_ratio: f64,
    /// `((T'-T)/2 + sin²(φ/2)) / sin⁴(φ/2)`.
    pub asymptotic_ratio: f64,
    pub closeness_bound: f64,
    pub closeness_max_observed: f64,
    pub closeness_samples: usize,
    pub partner_trace: f64,
    pub class_trace: f64,
    pub conj_class_check: bool,
    pub encounter: Encounter,
    pub encounter_inputs: EncounterInputs,
    pub uniqueness_radius: f64,
    pub bound_checks: BTreeMap<String, bool>,
}

impl PartnerCertificate {
    pub fn all_pass(&self) -> bool {
        self.bound_checks.values().all(|&b| b)
    }
}

/// Number of closeness samples along the partner.
pub const CLOSENESS_SAMPLES: usize = 256;

fn dist_e(m: &PslElement) -> f64 {
    ref_distance(&PslElement::IDENTITY, m)
}

/// The partner of `orbit` at `crossing`.
pub fn construct_partner(
    group: &Arc<GroupPresentation>,
    orbit: &PeriodicOrbit,
    crossing: &CrossingEvent,
    inputs: &EncounterInputs,
) -> Result<PartnerCertificate, PartnerError> {
    let t = orbit.period;
    let phi = crossing.phi();
    if t < 1.0 {
        return Err(PartnerError::PeriodTooShort(t));
    }
    if !(phi > 0.0 && phi < 1.0 / 3.0) {
        return Err(PartnerError::AngleTooLarge(phi));
    }
    let pf = crossing_frame(group, orbit, crossing, Orientation::Minus);
    let (t1, t2) = (pf.t1, pf.t2);
    let rot = rotation_factor(phi, FactorOrder::BCA)?;
    let (s, u, tau_rot) = (rot.s, rot.u, rot.t);
    let sn = (phi / 2.0).sin();
    let sin2 = sn * sn;

    let g_hat = pf.g * PslElement::b(s) * PslElement::a(-t2);
    let u_hat = (1.0 + (-t2).exp()) * u;
    let s_hat = (1.0 + (-t1).exp()) * s;
    let zeta = Word::product(group, &[&pf.w2, &pf.w1.inverse()]);

    // ŷ = Π(ĝ) and φ_T(ŷ) = Π(ĝ a_T) through the translates w₂⁻¹ĝ and
    // w₁⁻¹ĝ a_T, which sit next to the crossing; ĝ itself is far out
    let x_rep = pf.g * PslElement::j() * PslElement::a(-tau_rot) * PslElement::c(-u * (-t2).exp());
    let y_rep = pf.h * PslElement::b(s * (-t1).exp());
    let translate_residual = (pf.w2.element * x_rep)
        .rel_residual(&g_hat)
        .max((pf.w1.element * y_rep).rel_residual(&(g_hat * PslElement::a(t))));
    let y_hat = QuotientPoint::new(group, x_rep);
    let y_t = QuotientPoint::new(group, y_rep);
    let section_deviation = match section_solve_in(&y_hat, &y_t, 0.5, 1e-6, &[Word::identity()]) {
        Some(c) => (c.u - u_hat).abs().max((c.s - s_hat).abs()).max(c.t_star.abs()),
        None => f64::INFINITY,
    };
    if !(section_deviation <= 1e-8) {
        return Err(PartnerError::SectionMismatch(section_deviation));
    }

    // deck element of the translated base point
    let local_deck = Word::product(group, &[&pf.w1.inverse(), &pf.w2]);
    let closing = anosov_close_with_deck(group, &x_rep, t, u_hat, s_hat, &local_deck)?;
    let (sigma, eta, t_prime) = (closing.sigma, closing.eta, closing.t_prime);
    let k12 = (1.0 + (-t1).exp()) * (1.0 + (-t2).exp());
    let t_prime_closed_form = period_from_trace((t / 2.0).cosh() * 2.0 - k12 * (t / 2.0).exp() * sin2);
    let dev = (closing.half_gap - (-k12 * sin2).ln_1p()).abs();
    let lim = 12.0 * sin2 * (-t).exp();
    let action_bound = dev <= lim;

    // Closeness via left invariance:
    //   partner  w a_t = g b_s a_{t-T₂} c_{σe^t} b_{ηe^{-t}}
    //   t ≤ T₂:  reversed second loop  g d_φ a_{t-T₂}
    //   t ≥ T₂:  first loop            g a_{t-T₂}
    let mut closeness: f64 = 0.0;
    let n = CLOSENESS_SAMPLES;
    for k in 0..n {
        let tk = t * k as f64 / (n - 1) as f64;
        let tail = PslElement::c(sigma * tk.exp()) * PslElement::b(eta * (-tk).exp());
        let d = if tk <= t2 {
            ref_distance(&(PslElement::c(u * (tk - t2).exp()) * PslElement::a(tau_rot)), &tail)
        } else {
            dist_e(&(PslElement::b(s * (t2 - tk).exp()) * tail))
        };
        closeness = closeness.max(d);
    }
    let closeness_bound = 9.0 * sn.abs();

    let partner_word = local_deck.inverse();
    let class_trace = partner_word.class_trace(group);
    let partner_trace = 2.0 * (t_prime / 2.0).cosh();
    let conj_class_check = (partner_trace - class_trace).abs() <= 1e-9 * class_trace;
    let partner_point = closing.closed_rep;

    let enc = encounter(phi, inputs);
    let mut checks = BTreeMap::new();
    checks.insert("action_bound".to_string(), action_bound);
    checks.insert("t_prime_lt_t".to_string(), t_prime < t);
    checks.insert("t_prime_closed_form".to_string(), (t_prime - t_prime_closed_form).abs() < 1e-10);
    checks.insert("closeness".to_string(), closeness <= closeness_bound * C_METRIC);
    checks.insert("conj_class".to_string(), conj_class_check);
    checks.insert("loop_inequality".to_string(), crossing.loop_inequality);
    checks.insert("section".to_string(), section_deviation <= 1e-8);
    checks.insert("translates".to_string(), translate_residual < 1e-8);
    checks.insert("frame_relations".to_string(), pf.residual_first.max(pf.residual_second) < 1e-8);
    for name in ["sigma_bound", "eta_bound", "log_gap", "identity", "sign_law", "periodicity", "t_prime_agreement"] {
        checks.insert(format!("closing.{name}"), closing.bound_checks[name]);
    }
    if enc.in_regime {
        checks.insert("encounter_lower_bound".to_string(), enc.lower_bound);
    }

    Ok(PartnerCertificate {
        original: orbit.clone(),
        crossing: crossing.clone(),
        phi,
        s,
        u,
        tau_rot,
        u_hat,
        s_hat,
        section_deviation,
        translate_residual,
        deck: zeta,
        partner: PeriodicOrbit { word: partner_word, frame: partner_point, period: t_prime },
        partner_point,
        t_prime,
        t_prime_closed_form,
        action_difference: t_prime - t,
        action_bound,
        action_bound_ratio: dev / lim,
        asymptotic_ratio: (closing.half_gap + sin2) / (sin2 * sin2),
        closeness_bound,
        closeness_max_observed: closeness,
        closeness_samples: n,
        partner_trace,
        class_trace,
        conj_class_check,
        encounter: enc,
        encounter_inputs: *inputs,
        uniqueness_radius: inputs.phi0(),
        bound_checks: checks,
        frame: pf,
        closing,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PseudoPartnerCertificate {
    pub original: PeriodicOrbit,
    pub crossing: CrossingEvent,
    pub frame: CrossingFrame,
    pub orbit1: PeriodicOrbit,
    pub orbit2: PeriodicOrbit,
    pub closing1: ClosingCertificate,
    pub closing2: ClosingCertificate,
    pub total_period: f64,
    pub total_period_bound: bool,
    pub total_period_ratio: f64,
    /// `(c_{σ₁}b_{η₁})⁻¹ d_θ c_{σ₂}b_{η₂} = c_u b_s a_τ`.
    pub chain_u: f64,
    pub chain_s: f64,
    pub chain_tau: f64,
    pub chain_eps: f64,
    pub chain_residual: f64,
    pub chain_check: bool,
    /// The same three numbers from the closed-form formulas, not used for gating.
    pub chain_formula: (f64, f64, f64),
    pub bound_checks: BTreeMap<String, bool>,
}

impl PseudoPartnerCertificate {
    pub fn all_pass(&self) -> bool {
        self.bound_checks.values().all(|&b| b)
    }
}

/// Two closed orbits, one per loop of the crossing, chained near the crossing point.
pub fn construct_pseudo_partner(
    group: &GroupPresentation,
    orbit: &PeriodicOrbit,
    crossing: &CrossingEvent,
) -> Result<PseudoPartnerCertificate, PartnerError> {
    let t = orbit.period;
    let theta = crossing.theta;
    if t < 2.0 {
        return Err(PartnerError::PreconditionFailed(format!("T = {t} < 2")));
    }
    if !(theta < 0.25) {
        return Err(PartnerError::PreconditionFailed(format!("θ = {theta} ≥ 1/4")));
    }
    let pf = crossing_frame(group, orbit, crossing, Orientation::Plus);
    let (t1, t2) = (pf.t1, pf.t2);
    if t1 < 1.0 || t2 < 1.0 {
        return Err(PartnerError::PreconditionFailed(format!("T₁ = {t1}, T₂ = {t2}; both must be ≥ 1")));
    }
    let f1 = rotation_factor(theta, FactorOrder::CBA)?;
    let f2 = rotation_factor(-theta, FactorOrder::CBA)?;
    let closing1 = anosov_close_with_deck(group, &pf.g, t1 - f1.t, f1.u, f1.s, &pf.w1.inverse())?;
    let closing2 = anosov_close_with_deck(group, &pf.h, t2 - f2.t, f2.u, f2.s, &pf.w2.inverse())?;
    let total = closing1.t_prime + closing2.t_prime;
    let (sn, cs) = (theta / 2.0).sin_cos();
    // (T'-T)/2 = Σ (T_i'-T_i)/2 with T_i' = T_i - τ_i + 2·gap_i and τ₁ = τ₂
    let half = closing1.half_gap + closing2.half_gap - f1.t;
    let dev = (half - (cs * cs).ln()).abs();
    let lim = 10.0 * sn * sn * ((-t1).exp() + (-t2).exp());

    let (s1, e1) = (closing1.sigma, closing1.eta);
    let (s2, e2) = (closing2.sigma, closing2.eta);
    let m = (PslElement::c(s1) * PslElement::b(e1)).inverse()
        * PslElement::d(theta)
        * PslElement::c(s2)
        * PslElement::b(e2);
    let tol = ToleranceConfig::default();
    let chain = tri_decompose(&m, FactorOrder::CBA, &tol)?;
    let chain_residual = chain.assemble().rel_residual(&m);
    let eps = 2.0 * sn;
    let chain_check = chain_residual < 1e-8 && chain.u.abs() < 3.0 * eps && chain.s.abs() < eps;

    let (u1, sl1, tau1) = (f1.u, f1.s, f1.t);
    let et = (-tau1).exp();
    let rho = s2 * et * (sl1 - e1) - sl1 * e1 * (1.0 + sl1 * s2 * et);
    let base = u1 - e1 + s2 * et;
    let up = base + ((u1 - s1) * s2 * et * sl1 - base * rho) / (1.0 + rho);
    let spv = sl1 - e1 + e2 / et + rho * ((2.0 + rho) * e2 / et + sl1 - e1) - sl1 * e1 * (u1 - s1) * (1.0 + rho);
    let tp = 2.0 * (1.0 + rho).ln() + tau1;

    let mut checks = BTreeMap::new();
    checks.insert("total_period_bound".to_string(), dev <= lim);
    checks.insert("t1_prime_lt_t1".to_string(), closing1.t_prime < t1);
    checks.insert("t2_prime_lt_t2".to_string(), closing2.t_prime < t2);
    checks.insert("chain".to_string(), chain_check);
    checks.insert("frame_relations".to_string(), pf.residual_first.max(pf.residual_second) < 1e-8);
    for (tag, c) in [("closing1", &closing1), ("closing2", &closing2)] {
        for name in ["sigma_bound", "eta_bound", "log_gap", "identity", "sign_law", "periodicity", "t_prime_agreement"] {
            checks.insert(format!("{tag}.{name}"), c.bound_checks[name]);
        }
    }

    Ok(PseudoPartnerCertificate {
        original: orbit.clone(),
        crossing: crossing.clone(),
        orbit1: PeriodicOrbit { word: pf.w1.clone(), frame: closing1.closed_rep, period: closing1.t_prime },
        orbit2: PeriodicOrbit { word: pf.w2.clone(), frame: closing2.closed_rep, period: closing2.t_prime },
        frame: pf,
        total_period: total,
        total_period_bound: dev <= lim,
        total_period_ratio: dev / lim,
        chain_u: chain.u,
        chain_s: chain.s,
        chain_tau: chain.t,
        chain_eps: eps,
        chain_residual,
        chain_check,
        chain_formula: (up, spv, tp),
        bound_checks: checks,
        closing1,
        closing2,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconnectCertificate {
    pub u_tilde: f64,
    pub s_tilde: f64,
    pub u_check: f64,
    pub s_check: f64,
    pub deck: Word,
    pub closing: ClosingCertificate,
    #[serde(rename = "T_hat")]
    pub t_hat: f64,
    pub t_hat_trace: f64,
    pub eps: f64,
    pub eps_hat: f64,
    /// `|(T̂ - (T+T'))/2| / (10ε²e^{-T₂})`.
    pub ratio_sum: f64,
    /// `|(T̂ - 2T)/2 - ln(1+ûŝ)| / (11ε²e^{-T₂})`.
    pub ratio_double: f64,
    pub closeness_original: f64,
    pub closeness_partner: f64,
    pub bound_checks: BTreeMap<String, bool>,
}

impl ReconnectCertificate {
    pub fn all_pass(&self) -> bool {
        self.bound_checks.values().all(|&b| b)
    }
}

/// A closed orbit of period near `2T` that runs once along the original
/// orbit and once along its partner.
pub fn reconnect_double(group: &GroupPresentation, cert: &PartnerCertificate) -> Result<ReconnectCertificate, PartnerError> {
    let pf = &cert.frame;
    let t = cert.original.period;
    let tp = cert.t_prime;
    let t2 = pf.t2;
    let (u, sigma, eta) = (cert.u, cert.closing.sigma, cert.closing.eta);

    // base point next to the crossing: the translate by γ₂⁻¹ of γ₂ g d_π a_{T₂/2-τ}
    let x = pf.g * PslElement::j() * PslElement::a(t2 / 2.0 - cert.tau_rot);
    let u_tilde = (sigma - u * (-t2).exp()) * (t2 / 2.0).exp();
    let s_tilde = eta * (-t2 / 2.0).exp();
    let z_hat = x * PslElement::c(u_tilde * (-t).exp());
    let u_check = u_tilde * (1.0 - (-t).exp());
    let s_check = s_tilde * (1.0 - (-tp).exp());
    let delta = Word::product(group, &[&pf.w0.inverse(), &pf.w2.inverse(), &pf.w1]);
    let deck = delta.inverse();
    let closing = anosov_close_with_deck(group, &z_hat, t + tp, u_check, s_check, &deck)?;
    let t_hat = closing.t_prime;
    let t_hat_trace = period_from_trace(delta.class_trace(group));

    let eps = 1.5 * (cert.phi / 2.0).sin().abs();
    let eps_hat = 1.5 * eps * (-t2 / 2.0).exp();
    let lim_sum = 10.0 * eps * eps * (-t2).exp();
    let lim_double = 11.0 * eps * eps * (-t2).exp();
    let ratio_sum = closing.half_gap.abs() / lim_sum;
    let ratio_double = (closing.half_gap + cert.closing.half_gap - (cert.u_hat * cert.s_hat).ln_1p()).abs() / lim_double;

    let x0 = u_tilde * (-t).exp() + closing.sigma;
    let eh = closing.eta;
    let n = CLOSENESS_SAMPLES;
    let mut c_orig: f64 = 0.0;
    for k in 0..n {
        let tk = t * k as f64 / (n - 1) as f64;
        c_orig = c_orig.max(dist_e(&(PslElement::c(x0 * tk.exp()) * PslElement::b(eh * (-tk).exp()))));
    }
    let mut c_part: f64 = 0.0;
    for k in 0..n {
        let tk = tp * k as f64 / (n - 1) as f64;
        let m = PslElement::b(-eh * (-t - tk).exp())
            * PslElement::c(-closing.sigma * (t + tk).exp())
            * PslElement::b(s_tilde * (-tk).exp());
        c_part = c_part.max(dist_e(&m));
    }

    let mut checks = BTreeMap::new();
    checks.insert("sum_bound".to_string(), ratio_sum < 1.0);
    checks.insert("double_bound".to_string(), ratio_double < 1.0);
    checks.insert("trace_period".to_string(), (t_hat - t_hat_trace).abs() < 1e-9);
    checks.insert("closeness_original".to_string(), c_orig < 5.0 * eps_hat * C_METRIC);
    checks.insert("closeness_partner".to_string(), c_part < 5.0 * eps_hat * C_METRIC);
    for name in ["sigma_bound", "eta_bound", "log_gap", "identity", "periodicity"] {
        checks.insert(format!("closing.{name}"), closing.bound_checks[name]);
    }

    Ok(ReconnectCertificate {
        u_tilde,
        s_tilde,
        u_check,
        s_check,
        deck,
        t_hat,
        t_hat_trace,
        eps,
        eps_hat,
        ratio_sum,
        ratio_double,
        closeness_original: c_orig,
        closeness_partner: c_part,
        bound_checks: checks,
        closing,
    })
}

/// Whether two closed orbits coincide: equal class traces and a common
/// point after the best time shift. Returns the residual distance too.
pub fn same_closed_orbit(group: &Arc<GroupPresentation>, x: &PeriodicOrbit, y: &PeriodicOrbit) -> (bool, f64) {
    let tx = x.word.class_trace(group);
    let ty = y.word.class_trace(group);
    if (tx - ty).abs() > 1e-9 * tx.max(ty) {
        return (false, f64::INFINITY);
    }
    let ball = group.default_ball().expect("default ball within budget");
    let (yr, _) = reduce_to_domain(group, &y.frame);
    let qy = QuotientPoint::new(group, yr);
    let n = 256;
    let mut best = (f64::INFINITY, 0.0, 0usize, PslElement::IDENTITY);
    for k in 0..n {
        let t = x.period * k as f64 / n as f64;
        let (xr, _) = reduce_to_domain(group, &(x.frame * PslElement::a(t)));
        let qx = QuotientPoint::new(group, xr);
        let (d, arg) = quotient_distance_in(&qx, &qy, &ball);
        if d < best.0 {
            best = (d, t, arg, xr);
        }
    }
    // refine: xr a_s = γ yr exactly when the orbits agree
    let (_, t0, arg, xr) = best;
    let m = xr.inverse() * ball[arg].element * yr;
    let mm = m.mat();
    let a11 = if mm.a < 0.0 { -mm.a } else { mm.a };
    let shift = if a11 > 0.0 { 2.0 * a11.ln() } else { 0.0 };
    let d = ref_distance(&(xr * PslElement::a(shift)), &(ball[arg].element * yr));
    let scale = x.frame.frobenius().max(y.frame.frobenius()).max(1.0);
    let _ = t0;
    (d < 1e-9 * scale, d)
}

/// Two partner certificates describe the same orbit.
pub fn check_uniqueness(group: &Arc<GroupPresentation>, a: &PartnerCertificate, b: &PartnerCertificate) -> bool {
    same_closed_orbit(group, &a.partner, &b.partner).0
}

/// `⟨a_{T₁}d_θ, d_{-θ}a_{T₂}⟩` with `θ = π - φ`: the word `[1, 2]` is `a_T`
/// and crosses itself at the identity with exactly these `T₁, T₂, φ`.
pub fn synthetic_crossing_group(t1: f64, t2: f64, phi: f64) -> Result<(Arc<GroupPresentation>, PeriodicOrbit, CrossingEvent), PartnerError> {
    let theta = PI - phi;
    let g1 = PslElement::a(t1) * PslElement::d(theta);
    let g2 = PslElement::d(-theta) * PslElement::a(t2);
    let group = Arc::new(GroupPresentation::new(
        format!("synthetic({t1},{t2},{phi})"),
        vec![g1, g2],
        vec![],
        2,
        ToleranceConfig::default(),
    )?);
    let w = Word::from_letters(&group, &[1, 2])?;
    let orbit = orbit_from_word(&group, &w)?;
    let events = find_crossings(&group, &orbit, 2)?;
    let ev = events
        .into_iter()
        .filter(|e| (e.theta - theta).abs() < 1e-9)
        .min_by(|a, b| (a.l - t1).abs().total_cmp(&(b.l - t1).abs()))
        .ok_or_else(|| PartnerError::PreconditionFailed("synthetic crossing not found".into()))?;
    Ok((group, orbit, ev))
}

/// Which angle a search targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleKind {
    /// `φ = π - θ`, small for partners.
    Phi,
    /// `θ`, small for pseudo-partners.
    Theta,
}

/// A hit of [`search_crossings`].
#[derive(Clone, Debug)]
pub struct CrossingHit {
    pub orbit: PeriodicOrbit,
    pub crossing: CrossingEvent,
}

/// Deterministic search over orbit words `a·X·b·X^{±1}` with first letter 1,
/// `|X| ∈ x_lens`, for crossings whose angle lies within `rel_width·target`
/// of `target`. At most one hit per conjugacy class (by trace).
pub fn search_crossings(
    group: &GroupPresentation,
    target: f64,
    kind: AngleKind,
    rel_width: f64,
    x_lens: &[usize],
    conj_len: usize,
    max_hits: usize,
    accept: &(dyn Fn(&PeriodicOrbit, &CrossingEvent) -> bool + Sync),
) -> Result<Vec<CrossingHit>, PartnerError> {
    let ball = group.ball(conj_len)?;
    let n = group.rank() as i32;
    let alphabet: Vec<i32> = (1..=n).flat_map(|k| [k, -k]).collect();
    let mut hits: Vec<CrossingHit> = Vec::new();
    let mut traces: Vec<f64> = Vec::new();
    for &xl in x_lens {
        for xs in reduced_words(&alphabet, xl) {
            for &b in &alphabet {
                for inv in [false, true] {
                    let y: Vec<i32> = if inv { xs.iter().rev().map(|l| -l).collect() } else { xs.clone() };
                    let mut letters = vec![1];
                    letters.extend(&xs);
                    letters.push(b);
                    letters.extend(&y);
                    if !cyclically_reduced(&letters) {
                        continue;
                    }
                    let w = Word::from_letters(group, &letters)?;
                    let tr = w.element.trace();
                    if traces.iter().any(|&t| (t - tr).abs() <= 1e-9 * tr) {
                        continue;
                    }
                    let Ok(orbit) = orbit_from_word(group, &w) else { continue };
                    let events = find_crossings_in(group, &orbit, &ball);
                    let found = events.into_iter().find(|e| {
                        let v = match kind {
                            AngleKind::Phi => e.phi(),
                            AngleKind::Theta => e.theta,
                        };
                        (v - target).abs() < rel_width * target && accept(&orbit, e)
                    });
                    if let Some(crossing) = found {
                        traces.push(tr);
                        hits.push(CrossingHit { orbit, crossing });
                        if hits.len() >= max_hits {
                            return Ok(hits);
                        }
                    }
                }
            }
        }
    }
    Ok(hits)
}

fn cyclically_reduced(l: &[i32]) -> bool {
    let n = l.len();
    (0..n).all(|i| l[i] != -l[(i + 1) % n])
}

fn reduced_words(alphabet: &[i32], len: usize) -> Vec<Vec<i32>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &out {
            for &l in alphabet {
                if w.last() != Some(&-l) {
                    let mut v = w.clone();
                    v.push(l);
                    next.push(v);
                }
            }
        }
        out = next;
    }
    out
}
