//! The upper half plane, its unit tangent bundle and the identification
//! `Υ: T¹ℍ² → PSL(2,ℝ)` defined by `𝒟g(i, i) = (z, ξ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::psl2core::{wrap_angle, PslElement, ToleranceConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperplaneError {
    #[error("base points differ by {0:e}")]
    BasePointMismatch(f64),
    #[error("point with y = {0} is not in the upper half plane")]
    NotInUpperHalfPlane(f64),
    #[error("tangent vector has hyperbolic norm {0}")]
    NotUnit(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
}

impl HPoint {
    pub fn new(x: f64, y: f64) -> Result<Self, HyperplaneError> {
        if y > 0.0 && x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(HyperplaneError::NotInUpperHalfPlane(y))
        }
    }

    pub fn i() -> Self {
        Self { x: 0.0, y: 1.0 }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    fn from_complex(z: Complex64) -> Self {
        Self { x: z.re, y: z.im }
    }
}

/// A base point and a tangent vector of unit hyperbolic length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "TangentJson", into = "TangentJson")]
pub struct UnitTangent {
    pub base: HPoint,
    pub v: (f64, f64),
}

#[derive(Serialize, Deserialize)]
struct TangentJson {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
}

impl From<TangentJson> for UnitTangent {
    fn from(t: TangentJson) -> Self {
        UnitTangent { base: HPoint { x: t.x, y: t.y }, v: (t.vx, t.vy) }
    }
}

impl From<UnitTangent> for TangentJson {
    fn from(u: UnitTangent) -> Self {
        TangentJson { x: u.base.x, y: u.base.y, vx: u.v.0, vy: u.v.1 }
    }
}

impl UnitTangent {
    pub fn new(base: HPoint, v: (f64, f64), tol: &ToleranceConfig) -> Result<Self, HyperplaneError> {
        let u = UnitTangent { base, v };
        let n = u.norm();
        if (n - 1.0).abs() >= tol.eq_tol.max(1e-12) * 10.0 {
            return Err(HyperplaneError::NotUnit(n));
        }
        Ok(u)
    }

    /// `(i, i)`, the image of the identity.
    pub fn origin() -> Self {
        UnitTangent { base: HPoint::i(), v: (0.0, 1.0) }
    }

    /// Hyperbolic norm `|v| / y`.
    pub fn norm(&self) -> f64 {
        self.v.0.hypot(self.v.1) / self.base.y
    }

    fn xi(&self) -> Complex64 {
        Complex64::new(self.v.0, self.v.1)
    }

    /// Same base point, opposite direction.
    pub fn negated(&self) -> Self {
        UnitTangent { base: self.base, v: (-self.v.0, -self.v.1) }
    }
}

pub fn mobius_apply(g: &PslElement, p: &HPoint) -> HPoint {
    let m = g.mat();
    let z = p.to_complex();
    HPoint::from_complex((z * m.a + m.b) / (z * m.c + m.d))
}

/// `𝒟g(z, ξ) = ((az+b)/(cz+d), ξ/(cz+d)²)`.
pub fn tangent_map(g: &PslElement, u: &UnitTangent) -> UnitTangent {
    let m = g.mat();
    let z = u.base.to_complex();
    let den = z * m.c + m.d;
    let w = (z * m.a + m.b) / den;
    let xi = u.xi() / (den * den);
    UnitTangent { base: HPoint::from_complex(w), v: (xi.re, xi.im) }
}

/// `Υ(z, ξ) = b_x a_{ln y} d_θ` where `ξ = y·i·e^{iθ}`.
pub fn upsilon(u: &UnitTangent) -> PslElement {
    let HPoint { x, y } = u.base;
    let theta = (u.xi() / Complex64::new(0.0, y)).arg();
    PslElement::b(x) * PslElement::a(y.ln()) * PslElement::d(theta)
}

pub fn upsilon_inverse(g: &PslElement) -> UnitTangent {
    tangent_map(g, &UnitTangent::origin())
}

/// Time reversal `g ↦ g j`.
pub fn reverse(g: &PslElement) -> PslElement {
    *g * PslElement::j()
}

pub fn hyp_distance(p: &HPoint, q: &HPoint) -> f64 {
    let chord = (p.x - q.x).hypot(p.y - q.y);
    2.0 * (chord / (2.0 * (p.y * q.y).sqrt())).asinh()
}

/// Which of the two relations between the frames holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleCase {
    /// `Υ(u1) = Υ(u2)·d_θ`
    GH,
    /// `Υ(u2) = Υ(u1)·d_θ`
    HG,
    /// `θ ∈ {0, π}`: both hold.
    Either,
}

/// Angle `θ ∈ [0, π]` between two unit tangent vectors at a common point.
pub fn angle_between(
    u1: &UnitTangent,
    u2: &UnitTangent,
    tol: &ToleranceConfig,
) -> Result<(f64, AngleCase), HyperplaneError> {
    let gap = hyp_distance(&u1.base, &u2.base);
    if gap >= tol.eq_tol.max(1e-10) {
        return Err(HyperplaneError::BasePointMismatch(gap));
    }
    let signed = wrap_angle((u2.xi() / u1.xi()).arg());
    let theta = signed.abs();
    if theta < 1e-12 || PI - theta < 1e-12 {
        return Ok((theta, AngleCase::Either));
    }
    let g = upsilon(u1);
    let h = upsilon(u2);
    let d = PslElement::d(theta);
    let res_hg = (g * d).distance_frobenius(&h);
    let res_gh = (h * d).distance_frobenius(&g);
    let case = if res_hg <= res_gh { AngleCase::HG } else { AngleCase::GH };
    Ok((theta, case))
}
