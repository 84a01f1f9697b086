//! Arithmetic in SL(2,ℝ) and PSL(2,ℝ).
//!
//! [`PslElement`] stores the representative of `{G, -G}` whose first nonzero
//! entry (in the order a, b, c, d) is positive. Products and inverses of valid
//! elements are valid by construction; only matrices coming from outside
//! (files, user input) go through the determinant check.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::ops::Mul;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack between the reference metric and the left-invariant metric of the estimates.
pub const C_METRIC: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Psl2Error {
    #[error("non-finite input {0}")]
    NonFinite(f64),
    #[error("determinant {det} differs from 1 by more than {tol}")]
    Determinant { det: f64, tol: f64 },
    #[error("pivot {pivot:e} is below {tol:e}; element lies outside the chart")]
    PivotTooSmall { pivot: f64, tol: f64 },
    #[error("angle {0} outside (-π, π)")]
    AngleOutOfRange(f64),
    #[error("element with trace {0} is not hyperbolic")]
    NotHyperbolic(f64),
}

/// Numeric tolerances shared by every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    pub det_tol: f64,
    pub eq_tol: f64,
    pub pivot_tol: f64,
    pub class_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            det_tol: 1e-12,
            eq_tol: 1e-11,
            pivot_tol: 1e-8,
            class_tol: 1e-9,
        }
    }
}

/// A real 2×2 matrix, row major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl From<[f64; 4]> for Mat2 {
    fn from(v: [f64; 4]) -> Self {
        Mat2::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Mat2> for [f64; 4] {
    fn from(m: Mat2) -> Self {
        [m.a, m.b, m.c, m.d]
    }
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Adjugate; the inverse for unit determinant.
    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn neg(&self) -> Mat2 {
        Mat2::new(-self.a, -self.b, -self.c, -self.d)
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn scale(&self, k: f64) -> Mat2 {
        Mat2::new(self.a * k, self.b * k, self.c * k, self.d * k)
    }

    pub fn frobenius(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        let s = self.sub(o);
        s.a.abs().max(s.b.abs()).max(s.c.abs()).max(s.d.abs())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

/// An element of PSL(2,ℝ), held as its canonical representative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct PslElement(Mat2);

impl TryFrom<[f64; 4]> for PslElement {
    type Error = Psl2Error;
    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        PslElement::from_mat(Mat2::from(v), &ToleranceConfig::default())
    }
}

impl From<PslElement> for [f64; 4] {
    fn from(g: PslElement) -> Self {
        g.0.into()
    }
}

fn canonical(m: Mat2) -> Mat2 {
    for x in [m.a, m.b, m.c, m.d] {
        if x != 0.0 {
            return if x > 0.0 { m } else { m.neg() };
        }
    }
    m
}

/// Relative distance between the classes of two matrices in PSL(2,ℝ).
pub fn rel_residual(x: &Mat2, y: &Mat2) -> f64 {
    let plus = x.sub(y).frobenius();
    let minus = x.add(y).frobenius();
    plus.min(minus) / x.frobenius().max(y.frobenius()).max(1.0)
}

impl PslElement {
    pub const IDENTITY: PslElement = PslElement(Mat2::IDENTITY);

    /// Validates finiteness and `|det - 1| < det_tol`.
    pub fn from_mat(m: Mat2, tol: &ToleranceConfig) -> Result<Self, Psl2Error> {
        for x in [m.a, m.b, m.c, m.d] {
            if !x.is_finite() {
                return Err(Psl2Error::NonFinite(x));
            }
        }
        let det = m.det();
        if (det - 1.0).abs() >= tol.det_tol {
            return Err(Psl2Error::Determinant { det, tol: tol.det_tol });
        }
        Ok(PslElement(canonical(m)))
    }

    /// Wraps a matrix already known to have unit determinant.
    pub fn from_mat_unchecked(m: Mat2) -> Self {
        PslElement(canonical(m))
    }

    /// Rescales an invertible matrix with positive determinant to unit determinant.
    pub fn normalized(m: Mat2) -> Option<Self> {
        let det = m.det();
        if !(det > 0.0) || !m.is_finite() {
            return None;
        }
        Some(PslElement(canonical(m.scale(1.0 / det.sqrt()))))
    }

    pub fn mat(&self) -> Mat2 {
        self.0
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    /// `j = [(0 1; -1 0)]`, the half-turn of the fibre.
    pub fn j() -> Self {
        PslElement(Mat2::new(0.0, 1.0, -1.0, 0.0))
    }

    /// Geodesic flow generator `a_t`.
    pub fn a(t: f64) -> Self {
        let h = (t / 2.0).exp();
        PslElement(Mat2::new(h, 0.0, 0.0, 1.0 / h))
    }

    /// Stable horocycle generator `b_s`.
    pub fn b(s: f64) -> Self {
        PslElement(Mat2::new(1.0, s, 0.0, 1.0))
    }

    /// Unstable horocycle generator `c_u`.
    pub fn c(u: f64) -> Self {
        PslElement(Mat2::new(1.0, 0.0, u, 1.0))
    }

    /// Rotation `d_θ`; turns tangent vectors at `i` by `+θ`.
    pub fn d(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        PslElement::from_mat_unchecked(Mat2::new(c, s, -s, c))
    }

    pub fn inverse(&self) -> Self {
        PslElement(canonical(self.0.adjugate()))
    }

    /// Trace of the class, always ≥ 0.
    pub fn trace(&self) -> f64 {
        self.0.trace().abs()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.frobenius()
    }

    /// `min(‖G-H‖, ‖G+H‖)`.
    pub fn distance_frobenius(&self, other: &PslElement) -> f64 {
        let x = self.0;
        let y = other.0;
        x.sub(&y).frobenius().min(x.add(&y).frobenius())
    }

    /// Equality up to `eq_tol`, scaled by the size of the entries once they exceed 1.
    pub fn approx_eq(&self, other: &PslElement, tol: &ToleranceConfig) -> bool {
        let scale = self.frobenius().max(other.frobenius()).max(1.0);
        self.distance_frobenius(other) < tol.eq_tol * scale
    }

    pub fn rel_residual(&self, other: &PslElement) -> f64 {
        rel_residual(&self.0, &other.0)
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { *self };
        let mut acc = PslElement::IDENTITY;
        for _ in 0..n.unsigned_abs() {
            acc = acc * base;
        }
        acc
    }
}

impl Mul for PslElement {
    type Output = PslElement;
    fn mul(self, o: PslElement) -> PslElement {
        PslElement(canonical(self.0 * o.0))
    }
}

impl fmt::Display for PslElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.0;
        write!(f, "[{:.6} {:.6}; {:.6} {:.6}]", m.a, m.b, m.c, m.d)
    }
}

fn finite(t: f64) -> Result<f64, Psl2Error> {
    if t.is_finite() {
        Ok(t)
    } else {
        Err(Psl2Error::NonFinite(t))
    }
}

pub fn subgroup_a(t: f64) -> Result<PslElement, Psl2Error> {
    finite(t).map(PslElement::a)
}

pub fn subgroup_b(s: f64) -> Result<PslElement, Psl2Error> {
    finite(s).map(PslElement::b)
}

pub fn subgroup_c(u: f64) -> Result<PslElement, Psl2Error> {
    finite(u).map(PslElement::c)
}

pub fn subgroup_d(theta: f64) -> Result<PslElement, Psl2Error> {
    finite(theta).map(PslElement::d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

pub fn classify(g: &PslElement, tol: &ToleranceConfig) -> Classification {
    let tr = g.trace();
    if (tr - 2.0).abs() < tol.class_tol {
        Classification::Parabolic
    } else if tr < 2.0 {
        Classification::Elliptic
    } else {
        Classification::Hyperbolic
    }
}

/// `g = b_x a_{ln y} d_θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NakFactors {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl NakFactors {
    pub fn assemble(&self) -> PslElement {
        PslElement::b(self.x) * PslElement::a(self.y.ln()) * PslElement::d(self.theta)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

pub fn nak_decompose(g: &PslElement) -> NakFactors {
    let Mat2 { a, b, c, d } = g.mat();
    let n = c * c + d * d;
    NakFactors {
        x: (a * c + b * d) / n,
        y: 1.0 / n,
        theta: wrap_angle(-2.0 * c.atan2(d)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorOrder {
    /// `c_u b_s a_t`
    CBA,
    /// `b_s c_u a_t`
    BCA,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangularFactors {
    pub order: FactorOrder,
    pub u: f64,
    pub s: f64,
    pub t: f64,
}

impl TriangularFactors {
    pub fn assemble(&self) -> PslElement {
        let (c, b, a) = (PslElement::c(self.u), PslElement::b(self.s), PslElement::a(self.t));
        match self.order {
            FactorOrder::CBA => c * b * a,
            FactorOrder::BCA => b * c * a,
        }
    }
}

pub fn tri_decompose(
    g: &PslElement,
    order: FactorOrder,
    tol: &ToleranceConfig,
) -> Result<TriangularFactors, Psl2Error> {
    let mut m = g.mat();
    let pivot = match order {
        FactorOrder::CBA => m.a,
        FactorOrder::BCA => m.d,
    };
    if pivot.abs() <= tol.pivot_tol {
        return Err(Psl2Error::PivotTooSmall { pivot, tol: tol.pivot_tol });
    }
    if pivot < 0.0 {
        m = m.neg();
    }
    let Mat2 { a, b, c, d } = m;
    Ok(match order {
        FactorOrder::CBA => TriangularFactors { order, t: 2.0 * a.ln(), s: a * b, u: c / a },
        FactorOrder::BCA => TriangularFactors { order, t: -2.0 * d.ln(), s: b / d, u: c * d },
    })
}

/// Closed-form triangular factors of `d_φ`.
pub fn rotation_factor(phi: f64, order: FactorOrder) -> Result<TriangularFactors, Psl2Error> {
    if !(phi.abs() < PI) {
        return Err(Psl2Error::AngleOutOfRange(phi));
    }
    let (sn, cs) = (phi / 2.0).sin_cos();
    Ok(match order {
        FactorOrder::BCA => TriangularFactors {
            order,
            s: sn / cs,
            u: -sn * cs,
            t: -2.0 * cs.ln(),
        },
        FactorOrder::CBA => TriangularFactors {
            order,
            u: -sn / cs,
            s: sn * cs,
            t: 2.0 * cs.ln(),
        },
    })
}

/// Returns `(g, T)` with `γ = g a_T g⁻¹`.
///
/// The columns of `g` are eigenvectors (expanding first), scaled so that both
/// columns have equal length. That choice puts `g·i` at the point of the axis
/// nearest to `i` and keeps `g` as well conditioned as possible.
pub fn diagonalize_hyperbolic(
    gamma: &PslElement,
    tol: &ToleranceConfig,
) -> Result<(PslElement, f64), Psl2Error> {
    if classify(gamma, tol) != Classification::Hyperbolic {
        return Err(Psl2Error::NotHyperbolic(gamma.trace()));
    }
    let mut m = gamma.mat();
    if m.trace() < 0.0 {
        m = m.neg();
    }
    let tr = m.trace();
    let root = ((tr - 2.0) * (tr + 2.0)).sqrt();
    let lam = (tr + root) / 2.0;
    let lam_inv = 2.0 / (tr + root);
    let period = 2.0 * lam.ln();
    let eigvec = |l: f64| {
        let v1 = (m.b, l - m.a);
        let v2 = (l - m.d, m.c);
        if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) {
            v1
        } else {
            v2
        }
    };
    let (p, q) = eigvec(lam);
    let (r, s) = eigvec(lam_inv);
    let (np, nr) = (p.hypot(q), r.hypot(s));
    let mut f = Mat2::new(p / np, r / nr, q / np, s / nr);
    if f.det() < 0.0 {
        f = Mat2::new(f.a, -f.b, f.c, -f.d);
    }
    let frame = PslElement::normalized(f).ok_or(Psl2Error::NotHyperbolic(tr))?;
    Ok((frame, period))
}

/// Displacement `r = d_ℍ(i, m·i)` and fibre rotation `ω` of `m`.
fn cartan_parts(m: &Mat2) -> (f64, f64) {
    let r = 2.0 * ((m.a - m.d).hypot(m.b + m.c) / 2.0).asinh();
    let omega = wrap_angle(2.0 * (m.b - m.c).atan2(m.a + m.d));
    (r, omega)
}

/// Left-invariant reference metric on PSL(2,ℝ).
///
/// With `m = g⁻¹h`, `r` the hyperbolic displacement of `i` under `m` and `ω`
/// the angle between `ξ₂` and the parallel transport of `ξ₁`,
/// `d̂ = max(r, |ω| + 2·atan(sinh(r/2))) / √2`. The second term is the
/// largest displacement `m` induces on the circle of directions at `i`,
/// which makes `d̂` subadditive. `d̂(a_t, e) = |t|/√2`, `d̂(d_θ, e) = |θ|/√2`.
pub fn ref_distance(g: &PslElement, h: &PslElement) -> f64 {
    let m = g.mat().adjugate() * h.mat();
    let (r, omega) = cartan_parts(&m);
    r.max(omega.abs() + 2.0 * (r / 2.0).sinh().atan()) / SQRT_2
}

/// `|ln y|/√2 + |θ|/√2 + |x|` from the NAK factors.
pub fn distance_upper_bound(g: &PslElement) -> f64 {
    let f = nak_decompose(g);
    f.y.ln().abs() / SQRT_2 + f.theta.abs() / SQRT_2 + f.x.abs()
}

/// A random element `b_x a_t d_θ` with `|x|, |t| ≤ scale`.
pub fn random_element<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> PslElement {
    let x = rng.gen_range(-scale..=scale);
    let t = rng.gen_range(-scale..=scale);
    let th = rng.gen_range(-PI..PI);
    PslElement::b(x) * PslElement::a(t) * PslElement::d(th)
}
