//! Sphere-based occupancy of the swept arm.
//!
//! Each joint sphere is inflated over a time piece into a sphere whose center
//! is a polynomial in the trajectory parameters only (the joint occupancy).
//! Consecutive joint spheres are then linked by a short chain of spheres that
//! covers the tapered capsule between them (the forward occupancy). Centers
//! and radii come with their derivatives in `k`.

use alloc::vec::Vec;

use nalgebra::Vector3;
use thiserror::Error;

use crate::kinematics::{FramePoseSet, KinematicChain, KinematicsError, PzfkOptions};
use crate::math;
use crate::pz::{IdKind, PolyZonotope};
use crate::trajectory::TrajectoryPzBundle;

pub const DEFAULT_N_S: usize = 5;

const PARAM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OccupancyError {
    #[error("need at least 3 spheres per link, got {0}")]
    TooFewSpheres(usize),
    #[error("parameter k{index} = {value} is outside [-1, 1]")]
    ParameterOutOfRange { index: usize, value: f64 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("capsule radius {0} must be positive")]
    BadRadius(f64),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// A polynomial in the trajectory parameters with 3-vector coefficients,
/// stored flat for fast evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPolynomial {
    constant: Vector3<f64>,
    terms: Vec<(Vec<(usize, u16)>, Vector3<f64>)>,
    arity: usize,
}

impl ParamPolynomial {
    /// Fails if the set has independent generators or non-parameter ids.
    fn from_pz(p: &PolyZonotope<Vector3<f64>>) -> Option<Self> {
        if !p.independent().is_empty() {
            return None;
        }
        let mut arity = 0;
        let mut terms = Vec::with_capacity(p.dependent().len());
        for (m, g) in p.dependent() {
            let mut vars = Vec::with_capacity(m.terms().len());
            for &(id, e) in m.terms() {
                if id.kind != IdKind::Param {
                    return None;
                }
                arity = arity.max(id.index as usize + 1);
                vars.push((id.index as usize, e));
            }
            terms.push((vars, *g));
        }
        Some(Self {
            constant: p.center(),
            terms,
            arity,
        })
    }

    /// One more than the highest parameter index that appears.
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, k: &[f64]) -> Vector3<f64> {
        let mut out = self.constant;
        for (vars, g) in &self.terms {
            let mut w = 1.0;
            for &(v, e) in vars {
                w *= math::powi(k[v], i32::from(e));
            }
            out += g * w;
        }
        out
    }

    /// Value and one column of partial derivatives per entry of `k`.
    pub fn eval_with_jacobian(&self, k: &[f64]) -> (Vector3<f64>, Vec<Vector3<f64>>) {
        let mut out = self.constant;
        let mut jac = alloc::vec![Vector3::zeros(); k.len()];
        for (vars, g) in &self.terms {
            let mut w = 1.0;
            for &(v, e) in vars {
                w *= math::powi(k[v], i32::from(e));
            }
            out += g * w;
            for (a, &(v, e)) in vars.iter().enumerate() {
                let mut d = f64::from(e) * math::powi(k[v], i32::from(e) - 1);
                for (b, &(u, f)) in vars.iter().enumerate() {
                    if a != b {
                        d *= math::powi(k[u], i32::from(f));
                    }
                }
                jac[v] += g * d;
            }
        }
        (out, jac)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: Vector3<f64>,
    pub radius: f64,
}

/// A sphere together with the derivatives of its center and radius with
/// respect to every trajectory parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffSphere {
    pub center: Vector3<f64>,
    pub radius: f64,
    pub center_jacobian: Vec<Vector3<f64>>,
    pub radius_gradient: Vec<f64>,
}

impl DiffSphere {
    pub fn sphere(&self) -> Sphere {
        Sphere {
            center: self.center,
            radius: self.radius,
        }
    }
}

/// Joint sphere `sphere` swept over time piece `piece`.
#[derive(Debug, Clone, PartialEq)]
pub struct SjoEntry {
    pub sphere: usize,
    pub piece: usize,
    pub interval: usize,
    /// Center set, polynomial in the trajectory parameters only.
    pub center_pz: PolyZonotope<Vector3<f64>>,
    /// Body radius of the joint sphere.
    pub base_radius: f64,
    /// `base_radius` plus the norm of the box around everything that does
    /// not depend on `k` alone.
    pub radius: f64,
    center: ParamPolynomial,
}

impl SjoEntry {
    /// Builds the entry from a joint position set.
    pub fn from_position_set(
        sphere: usize,
        piece: usize,
        interval: usize,
        position: &PolyZonotope<Vector3<f64>>,
        base_radius: f64,
    ) -> Self {
        let (kept, rest) = position.split_dependent(|id| id.kind == IdKind::Param);
        let u = (rest.center().abs() + rest.radius()).norm();
        let center = ParamPolynomial::from_pz(&kept).expect("split keeps parameter-only monomials");
        Self {
            sphere,
            piece,
            interval,
            center_pz: kept,
            base_radius,
            radius: base_radius + u,
            center,
        }
    }

    pub fn center_polynomial(&self) -> &ParamPolynomial {
        &self.center
    }

    /// Radius growth over the body sphere.
    pub fn inflation(&self) -> f64 {
        self.radius - self.base_radius
    }

    pub fn slice(&self, k: &[f64]) -> Result<Sphere, OccupancyError> {
        check_k(k, self.center.arity())?;
        Ok(Sphere {
            center: self.center.eval(k),
            radius: self.radius,
        })
    }

    /// Slice with derivatives; `k` must cover every parameter of the chain.
    pub fn slice_diff(&self, k: &[f64]) -> Result<DiffSphere, OccupancyError> {
        check_k(k, self.center.arity())?;
        let (center, center_jacobian) = self.center.eval_with_jacobian(k);
        Ok(DiffSphere {
            center,
            radius: self.radius,
            center_jacobian,
            radius_gradient: alloc::vec![0.0; k.len()],
        })
    }
}

fn check_k(k: &[f64], arity: usize) -> Result<(), OccupancyError> {
    if k.len() < arity {
        return Err(OccupancyError::LengthMismatch {
            expected: arity,
            got: k.len(),
        });
    }
    match k.iter().position(|v| !(v.abs() <= 1.0 + PARAM_TOL)) {
        Some(index) => Err(OccupancyError::ParameterOutOfRange { index, value: k[index] }),
        None => Ok(()),
    }
}

/// Joint occupancy for every (piece, sphere), ordered by piece then sphere.
pub fn build_sjo(
    chain: &KinematicChain,
    bundle: &TrajectoryPzBundle,
    options: &PzfkOptions,
) -> Result<Vec<SjoEntry>, OccupancyError> {
    if bundle.dof() != chain.dof() {
        return Err(OccupancyError::LengthMismatch {
            expected: chain.dof(),
            got: bundle.dof(),
        });
    }
    let radii = chain.sphere_radii();
    let mut out = Vec::with_capacity(bundle.pieces.len() * radii.len());
    for (p, piece) in bundle.pieces.iter().enumerate() {
        let frames = chain.pzfk_with(bundle.piece_positions(p), options)?;
        for (s, frame) in frames.iter().enumerate() {
            out.push(SjoEntry::from_position_set(
                s,
                p,
                piece.interval,
                &frame.position,
                radii[s],
            ));
        }
    }
    Ok(out)
}

/// `n_s` spheres covering the tapered capsule between `a` and `b`. The first
/// and last are `a` and `b` themselves.
pub fn build_sfo(a: &DiffSphere, b: &DiffSphere, n_s: usize) -> Result<Vec<DiffSphere>, OccupancyError> {
    if n_s < 3 {
        return Err(OccupancyError::TooFewSpheres(n_s));
    }
    let n = a.center_jacobian.len();
    if b.center_jacobian.len() != n || a.radius_gradient.len() != n || b.radius_gradient.len() != n {
        return Err(OccupancyError::LengthMismatch {
            expected: n,
            got: b.center_jacobian.len(),
        });
    }
    let parts = (2 * (n_s - 2)) as f64;
    let delta = b.center - a.center;
    let dist = delta.norm();
    let dir = if dist > 0.0 { delta / dist } else { Vector3::zeros() };
    let s = dist / parts;
    let dr = (b.radius - a.radius) / parts;
    let s_perp_sq = s * s - dr * dr;
    // d s / d k and d dr / d k
    let ds: Vec<f64> = (0..n)
        .map(|v| dir.dot(&(b.center_jacobian[v] - a.center_jacobian[v])) / parts)
        .collect();
    let ddr: Vec<f64> = (0..n)
        .map(|v| (b.radius_gradient[v] - a.radius_gradient[v]) / parts)
        .collect();

    let mut out = Vec::with_capacity(n_s);
    out.push(a.clone());
    for m in 1..=n_s - 2 {
        let f = (2 * m - 1) as f64 / parts;
        let center = a.center + delta * f;
        let center_jacobian = (0..n)
            .map(|v| a.center_jacobian[v] * (1.0 - f) + b.center_jacobian[v] * f)
            .collect();
        let (radius, radius_gradient) = if s_perp_sq >= 0.0 {
            let ell = a.radius + f * (b.radius - a.radius);
            let r = math::sqrt(ell * ell + s_perp_sq);
            let grad = (0..n)
                .map(|v| {
                    let dell = a.radius_gradient[v] * (1.0 - f) + b.radius_gradient[v] * f;
                    (ell * dell + s * ds[v] - dr * ddr[v]) / r
                })
                .collect();
            (r, grad)
        } else if a.radius >= b.radius {
            (a.radius, a.radius_gradient.clone())
        } else {
            (b.radius, b.radius_gradient.clone())
        };
        out.push(DiffSphere {
            center,
            radius,
            center_jacobian,
            radius_gradient,
        });
    }
    out.push(b.clone());
    Ok(out)
}

/// One sphere of the forward occupancy. `m` counts from 1 along the link.
#[derive(Debug, Clone, PartialEq)]
pub struct SfoSphere {
    pub link: usize,
    pub piece: usize,
    pub interval: usize,
    pub m: usize,
    pub sphere: DiffSphere,
}

/// Forward occupancy of the whole chain at `k`, ordered by (piece, link, m).
/// Each joint sphere appears once: link `j` contributes spheres
/// `1..n_s` and only the last link also contributes sphere `n_s`.
pub fn forward_occupancy(
    sjo: &[SjoEntry],
    sphere_count: usize,
    k: &[f64],
    n_s: usize,
) -> Result<Vec<SfoSphere>, OccupancyError> {
    if n_s < 3 {
        return Err(OccupancyError::TooFewSpheres(n_s));
    }
    if sphere_count == 0 || !sjo.len().is_multiple_of(sphere_count) {
        return Err(OccupancyError::LengthMismatch {
            expected: sphere_count,
            got: sjo.len(),
        });
    }
    let mut out = Vec::new();
    for block in sjo.chunks(sphere_count) {
        let spheres = block.iter().map(|e| e.slice_diff(k)).collect::<Result<Vec<_>, _>>()?;
        let (piece, interval) = (block[0].piece, block[0].interval);
        if sphere_count == 1 {
            out.push(SfoSphere {
                link: 0,
                piece,
                interval,
                m: 1,
                sphere: spheres[0].clone(),
            });
            continue;
        }
        let links = sphere_count - 1;
        for j in 0..links {
            let chain = build_sfo(&spheres[j], &spheres[j + 1], n_s)?;
            let take = if j + 1 == links { n_s } else { n_s - 1 };
            for (m, sphere) in chain.into_iter().take(take).enumerate() {
                out.push(SfoSphere {
                    link: j,
                    piece,
                    interval,
                    m: m + 1,
                    sphere,
                });
            }
        }
    }
    Ok(out)
}

/// Convex hull of two spheres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaperedCapsule {
    pub a: Sphere,
    pub b: Sphere,
}

impl TaperedCapsule {
    pub fn new(a: Sphere, b: Sphere) -> Result<Self, OccupancyError> {
        for r in [a.radius, b.radius] {
            if !(r > 0.0) {
                return Err(OccupancyError::BadRadius(r));
            }
        }
        Ok(Self { a, b })
    }

    /// The ball at fraction `t` of the way from `a` to `b`. The capsule is
    /// the union of these balls over `t` in `[0, 1]`.
    pub fn ball_at(&self, t: f64) -> Sphere {
        Sphere {
            center: self.a.center + (self.b.center - self.a.center) * t,
            radius: self.a.radius + (self.b.radius - self.a.radius) * t,
        }
    }

    /// `min_t ‖p − c(t)‖ − r(t)`; nonpositive exactly on the capsule.
    pub fn gap(&self, p: &Vector3<f64>) -> f64 {
        // Convex in t, so golden-section search converges to the minimum.
        let g = |t: f64| {
            let s = self.ball_at(t);
            (p - s.center).norm() - s.radius
        };
        let ratio = 0.5 * (math::sqrt(5.0) - 1.0);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut f1, mut f2) = (g(x1), g(x2));
        for _ in 0..80 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = g(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = g(x2);
            }
        }
        g(0.0).min(g(1.0)).min(f1).min(f2)
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        self.gap(p) <= 0.0
    }
}

/// Axis-aligned box in a link's local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBox {
    pub center: Vector3<f64>,
    pub half_widths: Vector3<f64>,
}

/// Boxes around each link capsule, in the frame of the link's first joint.
pub fn link_boxes(chain: &KinematicChain) -> Vec<LinkBox> {
    let radii = chain.sphere_radii();
    let mut offsets: Vec<Vector3<f64>> = chain.joints().iter().skip(1).map(|j| j.offset).collect();
    if let Some(ee) = chain.end_effector() {
        offsets.push(ee.offset);
    }
    offsets
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let r = radii[j].max(radii[j + 1]);
            LinkBox {
                center: o * 0.5,
                half_widths: o.abs() * 0.5 + Vector3::repeat(r),
            }
        })
        .collect()
}

/// Link occupancy as a set: position of the link's first frame plus the
/// rotated link box.
pub fn build_pz_link_occupancy(frames: &[FramePoseSet], boxes: &[LinkBox]) -> Vec<PolyZonotope<Vector3<f64>>> {
    frames
        .iter()
        .zip(boxes)
        .map(|(frame, b)| {
            let generators = (0..3)
                .map(|l| {
                    let mut g = Vector3::zeros();
                    g[l] = b.half_widths[l];
                    g
                })
                .collect();
            let local = PolyZonotope::new(b.center, Vec::new(), generators);
            let rotated: PolyZonotope<Vector3<f64>> = frame.rotation.mul(&local);
            frame.position.minkowski_sum(&rotated)
        })
        .collect()
}
