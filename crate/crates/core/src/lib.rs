//! Reachability-based safe trajectory planning for serial revolute chains.
//!
//! The crate is `no_std` compatible (it needs `alloc`). Everything here is pure
//! computation: polynomial zonotopes, forward kinematics over sets, sphere-based
//! occupancy of the swept arm, the exact point-to-zonotope signed distance, and
//! a receding-horizon optimizer over a parameterized trajectory family. File
//! formats, scenario generation and the CLI live in the `reachplan` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod geometry;
pub mod kinematics;
mod math;
pub mod occupancy;
pub mod planner;
pub mod pz;
pub mod trajectory;

pub use nalgebra::{Matrix3, Vector3};

pub use geometry::{point_segment_distance, GeometryError, ObstacleSolid, SdfCase, SdfResult};
pub use kinematics::{EndEffector, FramePose, FramePoseSet, Joint, JointKind, KinematicChain, PzfkOptions};
pub use occupancy::{build_sfo, build_sjo, forward_occupancy, DiffSphere, SfoSphere, SjoEntry, Sphere};
pub use planner::{plan_receding_horizon, PlanReport, PlannerConfig, PlannerError, Termination};
pub use pz::{IdKind, IndeterminateId, Monomial, PolyZonotope, PzValue};
pub use trajectory::{JointState, Phase, TimePartition, TimePiece, TrajectoryFamily, TrajectoryPzBundle};
