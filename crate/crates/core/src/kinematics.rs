//! Serial revolute chains: classical forward kinematics and its
//! polynomial-zonotope counterpart.
//!
//! Frame convention: frame `j` sits at `p_{j-1} + R_{j-1} · offset_j` and
//! rotates about `axis_j` (expressed in frame `j-1`) by `q_j`. The optional
//! end effector adds one more frame with a fixed offset from the last joint,
//! so that the last joint's rotation moves a sphere.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::pz::{cos_sin, IdKind, Monomial, PolyZonotope, PzError, DEFAULT_TRIG_ORDER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("chain has no joints")]
    EmptyChain,
    #[error("joint {joint}: axis norm {norm} is not 1")]
    NonUnitAxis { joint: usize, norm: f64 },
    #[error("joint {joint}: sphere radius {radius} must be positive")]
    BadRadius { joint: usize, radius: f64 },
    #[error("joint {joint}: position limits [{lower}, {upper}] are inverted")]
    InvertedLimits { joint: usize, lower: f64, upper: f64 },
    #[error("joint {joint}: velocity limits [{lower}, {upper}] must straddle zero")]
    BadVelocityLimits { joint: usize, lower: f64, upper: f64 },
    #[error("base rotation is not orthonormal")]
    NonOrthonormalBase,
    #[error("non-finite value in joint {0}")]
    NonFinite(usize),
    #[error("expected {expected} joint values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("joint {joint} set depends on trajectory parameter k{index}, outside the chain")]
    ForeignParameter { joint: usize, index: u32 },
    #[error(transparent)]
    Pz(#[from] PzError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JointKind {
    #[default]
    Revolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub kind: JointKind,
    /// Unit rotation axis in the parent frame.
    pub axis: Vector3<f64>,
    /// Fixed translation from the parent frame, meters.
    pub offset: Vector3<f64>,
    /// Radius of the sphere that bounds the joint body, meters.
    pub sphere_radius: f64,
    pub q_limits: (f64, f64),
    pub qd_limits: (f64, f64),
}

/// Sphere attached to a fixed frame after the last joint.
#[derive(Debug, Clone, PartialEq)]
pub struct EndEffector {
    pub offset: Vector3<f64>,
    pub sphere_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    joints: Vec<Joint>,
    base_rotation: Matrix3<f64>,
    base_translation: Vector3<f64>,
    end_effector: Option<EndEffector>,
}

const UNIT_TOL: f64 = 1e-9;

impl KinematicChain {
    pub fn new(
        joints: Vec<Joint>,
        base_rotation: Matrix3<f64>,
        base_translation: Vector3<f64>,
        end_effector: Option<EndEffector>,
    ) -> Result<Self, KinematicsError> {
        if joints.is_empty() {
            return Err(KinematicsError::EmptyChain);
        }
        if (base_rotation.transpose() * base_rotation - Matrix3::identity()).amax() > UNIT_TOL
            || !base_translation.iter().all(|v| v.is_finite())
        {
            return Err(KinematicsError::NonOrthonormalBase);
        }
        for (j, joint) in joints.iter().enumerate() {
            let finite =
                joint.axis.iter().chain(joint.offset.iter()).all(|v| v.is_finite()) && joint.sphere_radius.is_finite();
            if !finite {
                return Err(KinematicsError::NonFinite(j));
            }
            let norm = joint.axis.norm();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(KinematicsError::NonUnitAxis { joint: j, norm });
            }
            if joint.sphere_radius <= 0.0 {
                return Err(KinematicsError::BadRadius {
                    joint: j,
                    radius: joint.sphere_radius,
                });
            }
            let (lo, hi) = joint.q_limits;
            if !(lo < hi) {
                return Err(KinematicsError::InvertedLimits {
                    joint: j,
                    lower: lo,
                    upper: hi,
                });
            }
            let (vlo, vhi) = joint.qd_limits;
            if !(vlo < 0.0 && 0.0 < vhi) {
                return Err(KinematicsError::BadVelocityLimits {
                    joint: j,
                    lower: vlo,
                    upper: vhi,
                });
            }
        }
        if let Some(ee) = &end_effector {
            if !(ee.sphere_radius > 0.0) {
                return Err(KinematicsError::BadRadius {
                    joint: joints.len(),
                    radius: ee.sphere_radius,
                });
            }
        }
        Ok(Self {
            joints,
            base_rotation,
            base_translation,
            end_effector,
        })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn base_rotation(&self) -> &Matrix3<f64> {
        &self.base_rotation
    }

    pub fn base_translation(&self) -> &Vector3<f64> {
        &self.base_translation
    }

    pub fn end_effector(&self) -> Option<&EndEffector> {
        self.end_effector.as_ref()
    }

    /// Number of spheres: one per joint, plus the end effector.
    pub fn sphere_count(&self) -> usize {
        self.joints.len() + usize::from(self.end_effector.is_some())
    }

    /// Number of links, each the tapered capsule between consecutive spheres.
    pub fn link_count(&self) -> usize {
        self.sphere_count() - 1
    }

    pub fn sphere_radii(&self) -> Vec<f64> {
        self.joints
            .iter()
            .map(|j| j.sphere_radius)
            .chain(self.end_effector.iter().map(|e| e.sphere_radius))
            .collect()
    }

    fn frame_offsets(&self) -> impl Iterator<Item = Vector3<f64>> + '_ {
        self.joints
            .iter()
            .map(|j| j.offset)
            .chain(self.end_effector.iter().map(|e| e.offset))
    }

    /// Sum of all offset lengths: an upper bound on how far any sphere center
    /// gets from the base.
    pub fn reach(&self) -> f64 {
        self.frame_offsets().map(|o| o.norm()).sum()
    }

    /// World poses of every frame (joints, then the end effector if any).
    pub fn fk(&self, q: &[f64]) -> Result<Vec<FramePose>, KinematicsError> {
        if q.len() != self.joints.len() {
            return Err(KinematicsError::LengthMismatch {
                expected: self.joints.len(),
                got: q.len(),
            });
        }
        let mut rotation = self.base_rotation;
        let mut position = self.base_translation;
        let mut out = Vec::with_capacity(self.sphere_count());
        for (joint, &angle) in self.joints.iter().zip(q) {
            position += rotation * joint.offset;
            rotation *= axis_rotation(&joint.axis, crate::math::cos(angle), crate::math::sin(angle));
            out.push(FramePose { rotation, position });
        }
        if let Some(ee) = &self.end_effector {
            position += rotation * ee.offset;
            out.push(FramePose { rotation, position });
        }
        Ok(out)
    }

    /// Sphere centers at configuration `q`.
    pub fn sphere_centers(&self, q: &[f64]) -> Result<Vec<Vector3<f64>>, KinematicsError> {
        Ok(self.fk(q)?.into_iter().map(|p| p.position).collect())
    }

    /// Set-valued forward kinematics with the default options.
    pub fn pzfk(&self, q: &[PolyZonotope<f64>]) -> Result<Vec<FramePoseSet>, KinematicsError> {
        self.pzfk_with(q, &PzfkOptions::default())
    }

    /// Set-valued forward kinematics: every frame pose reachable by a
    /// realization of `q` lies in the returned sets.
    pub fn pzfk_with(
        &self,
        q: &[PolyZonotope<f64>],
        options: &PzfkOptions,
    ) -> Result<Vec<FramePoseSet>, KinematicsError> {
        if q.len() != self.joints.len() {
            return Err(KinematicsError::LengthMismatch {
                expected: self.joints.len(),
                got: q.len(),
            });
        }
        let n = self.joints.len() as u32;
        for (j, qj) in q.iter().enumerate() {
            if let Some(id) = qj
                .ids()
                .into_iter()
                .find(|id| id.kind == IdKind::Param && id.index >= n)
            {
                return Err(KinematicsError::ForeignParameter {
                    joint: j,
                    index: id.index,
                });
            }
        }

        let mut rotation = PolyZonotope::point(self.base_rotation);
        let mut position = PolyZonotope::point(self.base_translation);
        let mut out = Vec::with_capacity(self.sphere_count());
        for (joint, qj) in self.joints.iter().zip(q) {
            let offset = joint.offset;
            let moved: PolyZonotope<Vector3<f64>> = rotation.map_linear(|r: Matrix3<f64>| r * offset);
            position = options.reduce(&position.minkowski_sum(&moved));
            let local = options.reduce(&joint_rotation_set(&joint.axis, qj, options.trig_order)?);
            rotation = options.reduce(&rotation.mul(&local));
            out.push(FramePoseSet {
                rotation: rotation.clone(),
                position: position.clone(),
            });
        }
        if let Some(ee) = &self.end_effector {
            let offset = ee.offset;
            let moved = rotation.map_linear(|r: Matrix3<f64>| r * offset);
            position = options.reduce(&position.minkowski_sum(&moved));
            out.push(FramePoseSet { rotation, position });
        }
        Ok(out)
    }
}

/// Rodrigues: `I + sin·K + (1 - cos)·K²` with `K` the cross-product matrix of
/// `axis`.
pub fn axis_rotation(axis: &Vector3<f64>, cos: f64, sin: f64) -> Matrix3<f64> {
    let k = axis.cross_matrix();
    Matrix3::identity() + k * sin + k * k * (1.0 - cos)
}

/// Rotation about `axis` by every angle in `q`.
pub fn joint_rotation_set(
    axis: &Vector3<f64>,
    q: &PolyZonotope<f64>,
    order: usize,
) -> Result<PolyZonotope<Matrix3<f64>>, PzError> {
    let (c, s) = cos_sin(q, order)?;
    let k = axis.cross_matrix();
    let k2 = k * k;
    let sin_part = s.map_linear(|v| k * v);
    let cos_part = c.negate().translate(1.0).map_linear(|v| k2 * v);
    Ok(sin_part.minkowski_sum(&cos_part).translate(Matrix3::identity()))
}

/// Generator-growth controls for [`KinematicChain::pzfk_with`].
///
/// Dependent monomials that exceed the per-id exponent caps are moved to
/// independent generators, and independent generators are boxed after every
/// step. Both moves only enlarge the set.
#[derive(Debug, Clone, PartialEq)]
pub struct PzfkOptions {
    pub trig_order: usize,
    /// Largest exponent kept per trajectory parameter; `None` keeps all.
    pub max_param_exponent: Option<u16>,
    /// Largest total degree kept in time indeterminates; `None` keeps all.
    pub max_time_degree: Option<u32>,
    pub box_independent: bool,
}

impl Default for PzfkOptions {
    fn default() -> Self {
        Self {
            trig_order: DEFAULT_TRIG_ORDER,
            max_param_exponent: Some(1),
            max_time_degree: Some(1),
            box_independent: true,
        }
    }
}

impl PzfkOptions {
    /// No truncation at all; generator counts grow multiplicatively.
    pub fn exact() -> Self {
        Self {
            trig_order: DEFAULT_TRIG_ORDER,
            max_param_exponent: None,
            max_time_degree: None,
            box_independent: false,
        }
    }

    fn demotes(&self, m: &Monomial) -> bool {
        let mut time_degree = 0u32;
        for &(id, e) in m.terms() {
            match id.kind {
                IdKind::Param => {
                    if self.max_param_exponent.is_some_and(|cap| e > cap) {
                        return true;
                    }
                }
                IdKind::Time => time_degree += u32::from(e),
                IdKind::Aux => {}
            }
        }
        self.max_time_degree.is_some_and(|cap| time_degree > cap)
    }

    fn reduce<V: crate::pz::PzValue>(&self, p: &PolyZonotope<V>) -> PolyZonotope<V> {
        let p = if self.max_param_exponent.is_some() || self.max_time_degree.is_some() {
            p.demote_dependent(|m| self.demotes(m))
        } else {
            p.clone()
        };
        if self.box_independent {
            p.box_independent()
        } else {
            p
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePose {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramePoseSet {
    pub rotation: PolyZonotope<Matrix3<f64>>,
    pub position: PolyZonotope<Vector3<f64>>,
}
