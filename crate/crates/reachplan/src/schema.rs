//! JSON file formats and their conversion to core types.

use reachplan_core::kinematics::KinematicsError;
use reachplan_core::planner::{ExecutedSegment, IterationRecord, PlanReport, Termination};
use reachplan_core::{EndEffector, GeometryError, Joint, JointKind, KinematicChain, Matrix3, ObstacleSolid, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseDto {
    /// Nine entries, row-major; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<[f64; 9]>,
    #[serde(default)]
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum JointKindDto {
    #[default]
    Revolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDto {
    #[serde(default)]
    pub kind: JointKindDto,
    pub axis: [f64; 3],
    pub offset: [f64; 3],
    pub radius: f64,
    pub q_lim: [f64; 2],
    pub qd_lim: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndEffectorDto {
    pub offset: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDto {
    pub base: BaseDto,
    pub joints: Vec<JointDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_effector: Option<EndEffectorDto>,
}

impl ChainDto {
    pub fn build(&self) -> Result<KinematicChain, KinematicsError> {
        let rotation = self
            .base
            .rotation
            .map_or_else(Matrix3::identity, |r| Matrix3::from_row_slice(&r));
        let joints = self
            .joints
            .iter()
            .map(|j| Joint {
                kind: match j.kind {
                    JointKindDto::Revolute => JointKind::Revolute,
                },
                axis: Vector3::from(j.axis),
                offset: Vector3::from(j.offset),
                sphere_radius: j.radius,
                q_limits: (j.q_lim[0], j.q_lim[1]),
                qd_limits: (j.qd_lim[0], j.qd_lim[1]),
            })
            .collect();
        let ee = self.end_effector.as_ref().map(|e| EndEffector {
            offset: Vector3::from(e.offset),
            sphere_radius: e.radius,
        });
        KinematicChain::new(joints, rotation, Vector3::from(self.base.translation), ee)
    }
}

/// Either explicit generators or an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObstacleDto {
    Generators {
        center: [f64; 3],
        generators: Vec<[f64; 3]>,
    },
    Box {
        center: [f64; 3],
        half_widths: [f64; 3],
    },
}

impl ObstacleDto {
    pub fn build(&self) -> Result<ObstacleSolid, GeometryError> {
        match self {
            ObstacleDto::Generators { center, generators } => ObstacleSolid::new(
                Vector3::from(*center),
                generators.iter().map(|g| Vector3::from(*g)).collect(),
            ),
            ObstacleDto::Box { center, half_widths } => {
                ObstacleSolid::axis_aligned_box(Vector3::from(*center), Vector3::from(*half_widths))
            }
        }
    }
}

/// A chain given inline or by fixture name (`"3dof"`, `"7dof"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainRef {
    Fixture(String),
    Inline(ChainDto),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDto {
    pub chain: ChainRef,
    pub obstacles: Vec<ObstacleDto>,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusDto {
    Success,
    SafeStop,
    Failure,
}

impl From<Termination> for StatusDto {
    fn from(t: Termination) -> Self {
        match t {
            Termination::Success => StatusDto::Success,
            Termination::SafeStop => StatusDto::SafeStop,
            Termination::Failure => StatusDto::Failure,
        }
    }
}

impl StatusDto {
    pub fn exit_code(self) -> i32 {
        match self {
            StatusDto::Success => 0,
            StatusDto::SafeStop => 2,
            StatusDto::Failure => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationDto {
    pub iter: usize,
    pub feasible: bool,
    pub k: Vec<f64>,
    pub solve_ms: f64,
    pub constraint_eval_ms: f64,
    /// `null` when no constraint rows were active.
    pub min_margin: Option<f64>,
}

impl From<&IterationRecord> for IterationDto {
    fn from(r: &IterationRecord) -> Self {
        Self {
            iter: r.iter,
            feasible: r.feasible,
            k: r.k.clone(),
            solve_ms: r.solve_ms,
            constraint_eval_ms: r.constraint_eval_ms,
            min_margin: r.min_margin,
        }
    }
}

/// One executed trajectory piece, enough to re-evaluate the motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDto {
    pub start: f64,
    pub q0: Vec<f64>,
    pub qd0: Vec<f64>,
    pub a_max: Vec<f64>,
    pub t_plan: f64,
    pub t_fin: f64,
    pub k: Vec<f64>,
    pub from: f64,
    pub to: f64,
}

impl From<&ExecutedSegment> for SegmentDto {
    fn from(s: &ExecutedSegment) -> Self {
        Self {
            start: s.start,
            q0: s.family.q0.clone(),
            qd0: s.family.qd0.clone(),
            a_max: s.family.a_max.clone(),
            t_plan: s.family.t_plan,
            t_fin: s.family.t_fin,
            k: s.k.clone(),
            from: s.from,
            to: s.to,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReportDto {
    pub status: StatusDto,
    pub iterations: Vec<IterationDto>,
    pub final_config: Vec<f64>,
    pub executed: Vec<SegmentDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<crate::ground_truth::Verdict>,
}

impl From<&PlanReport> for PlanReportDto {
    fn from(r: &PlanReport) -> Self {
        Self {
            status: r.status.into(),
            iterations: r.iterations.iter().map(IterationDto::from).collect(),
            final_config: r.final_config.clone(),
            executed: r.executed.iter().map(SegmentDto::from).collect(),
            ground_truth: None,
        }
    }
}

/// One sphere of the forward occupancy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereDumpDto {
    pub j: usize,
    pub i: usize,
    pub piece: usize,
    pub m: usize,
    pub center: [f64; 3],
    pub radius: f64,
}

/// Signed distance query answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdfDto {
    pub distance: f64,
    pub gradient: [f64; 3],
    pub case: String,
}

/// Serializes with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// One row of a sampled executed motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySampleDto {
    pub t: f64,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
}

/// Samples the executed motion every `dt` seconds of global time, plus the
/// final instant.
pub fn sample_trajectory(executed: &[ExecutedSegment], dt: f64) -> Vec<TrajectorySampleDto> {
    let Some(last) = executed.last() else {
        return Vec::new();
    };
    let end = last.start + last.duration();
    let steps = (end / dt).floor() as u64;
    let times = (0..=steps)
        .map(|i| i as f64 * dt)
        .chain((end > steps as f64 * dt).then_some(end));
    times
        .map(|t| {
            // First segment whose span reaches t.
            let seg = executed.iter().find(|s| t <= s.start + s.duration()).unwrap_or(last);
            let local = (t - seg.start + seg.from).clamp(seg.from, seg.to);
            let (q, qd) = (0..seg.family.dof())
                .map(|j| seg.family.joint_state(j, seg.k[j], local))
                .unzip();
            TrajectorySampleDto { t, q, qd }
        })
        .collect()
}
