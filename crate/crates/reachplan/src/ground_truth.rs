//! Independent collision check of an executed motion: dense time sampling,
//! each link modeled as the hull of its two end spheres and probed by
//! spheres sampled along its axis.

use reachplan_core::planner::ExecutedSegment;
use reachplan_core::{KinematicChain, ObstacleSolid, Vector3};
use serde::{Deserialize, Serialize};

pub const DEFAULT_DT_FINE: f64 = 1e-3;
/// Spacing of the probe spheres along each link axis, meters.
pub const AXIS_STEP: f64 = 2e-3;
/// Pairs provably farther apart than this are not probed.
const BROADPHASE_GAP: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub time: f64,
    pub link: usize,
    pub obstacle: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub collision: bool,
    /// Smallest clearance among probed pairs; `None` if every pair stayed
    /// beyond the broadphase gap.
    pub min_clearance: Option<f64>,
    pub first_contact: Option<Contact>,
    pub samples: usize,
}

/// Smallest clearance between a link (or the lone sphere of a one-sphere
/// chain) and the obstacles at configuration `q`, as
/// `(link, obstacle, clearance)`, skipping pairs beyond the broadphase gap.
pub fn configuration_clearance(
    chain: &KinematicChain,
    obstacles: &[ObstacleSolid],
    q: &[f64],
    axis_step: f64,
) -> Option<(usize, usize, f64)> {
    let centers = chain.sphere_centers(q).expect("configuration length matches the chain");
    let radii = chain.sphere_radii();
    let pairs: Vec<(usize, usize)> = if centers.len() == 1 {
        vec![(0, 0)]
    } else {
        (0..centers.len() - 1).map(|j| (j, j + 1)).collect()
    };
    let mut best: Option<(usize, usize, f64)> = None;
    for (link, &(a, b)) in pairs.iter().enumerate() {
        let (ca, cb, ra, rb) = (centers[a], centers[b], radii[a], radii[b]);
        let len = (cb - ca).norm();
        let mid = (ca + cb) * 0.5;
        let reach = 0.5 * len + ra.max(rb);
        let samples = ((len / axis_step).ceil() as usize).max(1);
        for (n, o) in obstacles.iter().enumerate() {
            if (mid - o.center()).norm() - o.bounding_radius() - reach > BROADPHASE_GAP {
                continue;
            }
            let d = (0..=samples)
                .map(|i| {
                    let f = i as f64 / samples as f64;
                    let c: Vector3<f64> = ca + (cb - ca) * f;
                    o.sdf(&c) - (ra + (rb - ra) * f)
                })
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, _, v)| d < v) {
                best = Some((link, n, d));
            }
        }
    }
    best
}

/// Samples every executed segment at the global time grid of step `dt_fine`
/// plus each segment's end, and reports the first sample with clearance
/// `≤ 0`.
pub fn ground_truth_collision_check(
    chain: &KinematicChain,
    obstacles: &[ObstacleSolid],
    executed: &[ExecutedSegment],
    dt_fine: f64,
) -> Verdict {
    ground_truth_with_step(chain, obstacles, executed, dt_fine, AXIS_STEP)
}

pub fn ground_truth_with_step(
    chain: &KinematicChain,
    obstacles: &[ObstacleSolid],
    executed: &[ExecutedSegment],
    dt_fine: f64,
    axis_step: f64,
) -> Verdict {
    let mut verdict = Verdict {
        collision: false,
        min_clearance: None,
        first_contact: None,
        samples: 0,
    };
    for seg in executed {
        let end = seg.start + seg.duration();
        let first = (seg.start / dt_fine).ceil() as u64;
        let last = (end / dt_fine).floor() as u64;
        let times = (first..=last).map(|i| i as f64 * dt_fine).chain(core::iter::once(end));
        for t in times {
            verdict.samples += 1;
            let q = seg.config_at(t);
            let Some((link, obstacle, d)) = configuration_clearance(chain, obstacles, &q, axis_step) else {
                continue;
            };
            if verdict.min_clearance.is_none_or(|m| d < m) {
                verdict.min_clearance = Some(d);
            }
            if d <= 0.0 && verdict.first_contact.is_none() {
                verdict.collision = true;
                verdict.first_contact = Some(Contact {
                    time: t,
                    link,
                    obstacle,
                    distance: d,
                });
            }
        }
    }
    verdict
}
