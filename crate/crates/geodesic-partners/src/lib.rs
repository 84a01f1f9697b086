//! Periodic orbits of the geodesic flow on compact hyperbolic surfaces, their
//! self-crossings in configuration space, and the partner orbits obtained by
//! switching the connections inside a crossing.
//!
//! Points of the unit tangent bundle are elements of PSL(2,ℝ), the surface is
//! `Γ\ℍ²` for a Fuchsian group `Γ` given by generator matrices, and the flows
//! act by right multiplication:
//!
//! | flow | one-parameter subgroup |
//! |------|------------------------|
//! | geodesic `φ_t` | `a_t = diag(e^{t/2}, e^{-t/2})` |
//! | stable horocycle | `b_s` (upper unipotent) |
//! | unstable horocycle | `c_u` (lower unipotent) |
//! | rotation of the fibre | `d_θ` |
//!
//! Every construction returns a certificate that records the residuals of the
//! identities it relied on and the outcome of each quantitative bound.
//!
//! ```
//! use geodesic_partners::fuchsian::{builtin_octagon, orbit_from_word, Word};
//!
//! let group = builtin_octagon();
//! let w = Word::from_letters(&group, &[1, 2]).unwrap();
//! let orbit = orbit_from_word(&group, &w).unwrap();
//! assert!(orbit.period > 3.0);
//! ```

pub mod acceptance;
pub mod closing;
pub mod flows;
pub mod fuchsian;
pub mod hyperplane;
pub mod partner;
pub mod psl2core;
pub mod report;

pub use psl2core::{Mat2, PslElement, ToleranceConfig, C_METRIC};
