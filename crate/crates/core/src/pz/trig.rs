use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use super::{PolyZonotope, PzError};
use crate::math;

pub const DEFAULT_TRIG_ORDER: usize = 4;

/// Largest `|cos(x + phase)|` over `x ∈ [lo, hi]`.
fn max_abs_cos(lo: f64, hi: f64, phase: f64) -> f64 {
    let (a, b) = (lo + phase, hi + phase);
    if b - a >= PI {
        return 1.0;
    }
    // |cos| peaks at integer multiples of π.
    if math::floor(b / PI) >= math::ceil(a / PI) {
        return 1.0;
    }
    let ca = math::cos(a);
    let cb = math::cos(b);
    let m = if ca.abs() > cb.abs() { ca.abs() } else { cb.abs() };
    // Guard against rounding in the endpoint evaluation.
    (m + 4.0 * f64::EPSILON).min(1.0)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Lagrange remainder bound of an order-`order` Taylor expansion of
/// `cos(x + phase)` about `c` over `[c - rad, c + rad]`.
fn remainder(c: f64, rad: f64, order: usize, phase: f64) -> f64 {
    let n = order + 1;
    // d^n/dx^n cos(x + phase) = cos(x + phase + nπ/2)
    let bound = max_abs_cos(c - rad, c + rad, phase + n as f64 * FRAC_PI_2);
    bound * math::powi(rad, n as i32) / factorial(n)
}

/// Radius of the remainder generators `(cos, sin)` that [`cos_sin`] adds for
/// a scalar set with center `c` and generator radius `rad`.
pub fn trig_remainder_radius(c: f64, rad: f64, order: usize) -> (f64, f64) {
    (remainder(c, rad, order, 0.0), remainder(c, rad, order, -FRAC_PI_2))
}

/// Overapproximates `cos(q)` and `sin(q)` for every realization of the scalar
/// set `q`: Taylor polynomial about the center of `q`, evaluated in polynomial
/// zonotope arithmetic, plus the Lagrange remainder as one fresh independent
/// generator each.
pub fn cos_sin(q: &PolyZonotope<f64>, order: usize) -> Result<(PolyZonotope<f64>, PolyZonotope<f64>), PzError> {
    if order == 0 {
        return Err(PzError::ZeroOrder);
    }
    let c = q.center();
    let (cc, sc) = (math::cos(c), math::sin(c));
    if q.is_point() {
        return Ok((PolyZonotope::point(cc), PolyZonotope::point(sc)));
    }
    let delta = q.translate(-c);
    let rad = delta.radius();

    // Derivatives at c cycle through (cos, -sin, -cos, sin) and
    // (sin, cos, -sin, -cos).
    let cos_deriv = [cc, -sc, -cc, sc];
    let sin_deriv = [sc, cc, -sc, -cc];

    let mut cos_pz = PolyZonotope::point(cc);
    let mut sin_pz = PolyZonotope::point(sc);
    let mut power = PolyZonotope::point(1.0);
    for n in 1..=order {
        power = power.mul(&delta);
        let inv_fact = 1.0 / factorial(n);
        cos_pz = cos_pz.minkowski_sum(&power.scale(cos_deriv[n % 4] * inv_fact));
        sin_pz = sin_pz.minkowski_sum(&power.scale(sin_deriv[n % 4] * inv_fact));
    }

    let (rc, rs) = trig_remainder_radius(c, rad, order);
    let cos_pz = cos_pz.minkowski_sum(&PolyZonotope::new(0.0, Vec::new(), alloc::vec![rc]));
    let sin_pz = sin_pz.minkowski_sum(&PolyZonotope::new(0.0, Vec::new(), alloc::vec![rs]));
    Ok((cos_pz, sin_pz))
}
