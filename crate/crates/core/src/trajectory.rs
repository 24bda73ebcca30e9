//! Parameterized joint trajectories and their polynomial-zonotope
//! overapproximation over a partition of the horizon.
//!
//! Every joint follows a constant acceleration `a_max_j · k_j` on
//! `[0, t_plan)`, then brakes linearly in velocity to a full stop at `t_fin`:
//!
//! ```text
//! q(t) = q0 + qd0 t + a t²/2                                   t <  t_plan
//! q(t) = q(t_plan) + v_plan (2 t_fin - t_plan - t)(t - t_plan)
//!                           / (2 (t_fin - t_plan))              t >= t_plan
//! ```
//!
//! with `v_plan = qd0 + a t_plan`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::pz::{IndeterminateId, Monomial, PolyZonotope};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("need 0 < t_plan < t_fin, got t_plan = {t_plan}, t_fin = {t_fin}")]
    BadHorizon { t_plan: f64, t_fin: f64 },
    #[error("acceleration scale must be positive")]
    BadAccelerationScale,
    #[error("q0, qd0 and a_max lengths differ")]
    LengthMismatch,
    #[error("time {0} outside the horizon")]
    TimeOutOfRange(f64),
    #[error("trajectory parameter k[{index}] = {value} outside [-1, 1]")]
    ParameterOutOfRange { index: usize, value: f64 },
    #[error("number of time intervals must be at least 1")]
    NoIntervals,
}

pub const DEFAULT_T_PLAN: f64 = 0.5;
pub const DEFAULT_T_FIN: f64 = 1.0;
pub const DEFAULT_N_T: usize = 40;
pub const DEFAULT_A_MAX: f64 = core::f64::consts::PI / 24.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFamily {
    pub q0: Vec<f64>,
    pub qd0: Vec<f64>,
    pub t_plan: f64,
    pub t_fin: f64,
    /// Per-joint scale from `k ∈ [-1, 1]` to acceleration, rad/s².
    pub a_max: Vec<f64>,
}

/// Position and velocity at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
}

impl TrajectoryFamily {
    pub fn new(q0: Vec<f64>, qd0: Vec<f64>, t_plan: f64, t_fin: f64, a_max: Vec<f64>) -> Result<Self, TrajectoryError> {
        if !(0.0 < t_plan && t_plan < t_fin && t_fin.is_finite()) {
            return Err(TrajectoryError::BadHorizon { t_plan, t_fin });
        }
        if q0.len() != qd0.len() || q0.len() != a_max.len() {
            return Err(TrajectoryError::LengthMismatch);
        }
        if a_max.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(TrajectoryError::BadAccelerationScale);
        }
        Ok(Self {
            q0,
            qd0,
            t_plan,
            t_fin,
            a_max,
        })
    }

    /// Family with one shared acceleration scale.
    pub fn uniform(q0: Vec<f64>, qd0: Vec<f64>, t_plan: f64, t_fin: f64, a_max: f64) -> Result<Self, TrajectoryError> {
        let n = q0.len();
        Self::new(q0, qd0, t_plan, t_fin, alloc::vec![a_max; n])
    }

    pub fn dof(&self) -> usize {
        self.q0.len()
    }

    pub fn check_parameter(&self, k: &[f64]) -> Result<(), TrajectoryError> {
        if k.len() != self.dof() {
            return Err(TrajectoryError::LengthMismatch);
        }
        match k.iter().position(|v| !(-1.0..=1.0).contains(v)) {
            Some(index) => Err(TrajectoryError::ParameterOutOfRange { index, value: k[index] }),
            None => Ok(()),
        }
    }

    /// `(q, q̇)` of joint `j` at time `t`, no range checks.
    pub fn joint_state(&self, j: usize, k: f64, t: f64) -> (f64, f64) {
        let a = self.a_max[j] * k;
        let (q0, v0, tp, tf) = (self.q0[j], self.qd0[j], self.t_plan, self.t_fin);
        if t < tp {
            (q0 + v0 * t + 0.5 * a * t * t, v0 + a * t)
        } else {
            let q_plan = q0 + v0 * tp + 0.5 * a * tp * tp;
            let v_plan = v0 + a * tp;
            let d = tf - tp;
            let u = t - tp;
            (q_plan + v_plan * (2.0 * d - u) * u / (2.0 * d), v_plan * (tf - t) / d)
        }
    }

    pub fn eval(&self, k: &[f64], t: f64) -> Result<JointState, TrajectoryError> {
        self.check_parameter(k)?;
        if !(0.0..=self.t_fin).contains(&t) {
            return Err(TrajectoryError::TimeOutOfRange(t));
        }
        let (q, qd) = (0..self.dof()).map(|j| self.joint_state(j, k[j], t)).unzip();
        Ok(JointState { q, qd })
    }

    /// Partial derivative of `q_j(t; k)` with respect to `k_j`.
    pub fn position_sensitivity(&self, j: usize, t: f64) -> f64 {
        let (tp, tf) = (self.t_plan, self.t_fin);
        let a = self.a_max[j];
        if t < tp {
            0.5 * a * t * t
        } else {
            let d = tf - tp;
            let u = t - tp;
            0.5 * a * tp * tp + a * tp * (2.0 * d - u) * u / (2.0 * d)
        }
    }

    /// Family starting from the state this one reaches at `t_plan`.
    pub fn successor(&self, k: &[f64]) -> Result<Self, TrajectoryError> {
        let state = self.eval(k, self.t_plan)?;
        Self::new(state.q, state.qd, self.t_plan, self.t_fin, self.a_max.clone())
    }
}

/// Uniform partition of `[0, t_fin]` into `n_t` time sets, interval `i`
/// carrying indeterminate `time(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    t_fin: f64,
    intervals: Vec<PolyZonotope<f64>>,
}

impl TimePartition {
    pub fn new(t_fin: f64, n_t: usize) -> Result<Self, TrajectoryError> {
        if n_t == 0 {
            return Err(TrajectoryError::NoIntervals);
        }
        if !(t_fin > 0.0 && t_fin.is_finite()) {
            return Err(TrajectoryError::BadHorizon { t_plan: 0.0, t_fin });
        }
        let dt = t_fin / n_t as f64;
        let intervals = (0..n_t)
            .map(|i| {
                let center = (2 * i + 1) as f64 * dt / 2.0;
                PolyZonotope::new(
                    center,
                    alloc::vec![(Monomial::var(IndeterminateId::time(i as u32)), dt / 2.0)],
                    Vec::new(),
                )
            })
            .collect();
        Ok(Self { t_fin, intervals })
    }

    pub fn n_t(&self) -> usize {
        self.intervals.len()
    }

    pub fn dt(&self) -> f64 {
        self.t_fin / self.n_t() as f64
    }

    pub fn t_fin(&self) -> f64 {
        self.t_fin
    }

    pub fn intervals(&self) -> &[PolyZonotope<f64>] {
        &self.intervals
    }

    /// `[start, end]` of interval `i`.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        let dt = self.dt();
        (
            i as f64 * dt,
            if i + 1 == self.n_t() {
                self.t_fin
            } else {
                (i + 1) as f64 * dt
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Constant acceleration, `[0, t_plan)`.
    Plan,
    /// Braking, `[t_plan, t_fin]`.
    Brake,
}

/// One contiguous time set on which a single trajectory branch is active.
/// An interval straddling `t_plan` yields two pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePiece {
    pub interval: usize,
    pub start: f64,
    pub end: f64,
    pub phase: Phase,
    pub time_id: IndeterminateId,
}

impl TimePiece {
    pub fn time_set(&self) -> PolyZonotope<f64> {
        PolyZonotope::new(
            0.5 * (self.start + self.end),
            alloc::vec![(Monomial::var(self.time_id), 0.5 * (self.end - self.start))],
            Vec::new(),
        )
    }

    /// Time at which `time_id` takes the value `x`.
    pub fn time_at(&self, x: f64) -> f64 {
        0.5 * (self.start + self.end) + 0.5 * (self.end - self.start) * x
    }
}

/// Position and velocity sets for every (piece, joint).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPzBundle {
    pub pieces: Vec<TimePiece>,
    /// `positions[piece][joint]`
    pub positions: Vec<Vec<PolyZonotope<f64>>>,
    /// `velocities[piece][joint]`
    pub velocities: Vec<Vec<PolyZonotope<f64>>>,
}

const STRADDLE_TOL: f64 = 1e-12;

pub fn param_id(joint: usize) -> IndeterminateId {
    IndeterminateId::param(joint as u32)
}

impl TrajectoryPzBundle {
    /// Substitutes the time and parameter sets into the trajectory formulas.
    pub fn new(family: &TrajectoryFamily, partition: &TimePartition) -> Self {
        let mut pieces = Vec::with_capacity(partition.n_t() + 1);
        for i in 0..partition.n_t() {
            let (a, b) = partition.bounds(i);
            let tp = family.t_plan;
            if a < tp - STRADDLE_TOL && b > tp + STRADDLE_TOL {
                pieces.push((i, a, tp, Phase::Plan));
                pieces.push((i, tp, b, Phase::Brake));
            } else if b <= tp + STRADDLE_TOL {
                pieces.push((i, a, b, Phase::Plan));
            } else {
                pieces.push((i, a, b, Phase::Brake));
            }
        }
        let pieces: Vec<TimePiece> = pieces
            .into_iter()
            .enumerate()
            .map(|(p, (interval, start, end, phase))| TimePiece {
                interval,
                start,
                end,
                phase,
                time_id: IndeterminateId::time(p as u32),
            })
            .collect();

        let mut positions = Vec::with_capacity(pieces.len());
        let mut velocities = Vec::with_capacity(pieces.len());
        for piece in &pieces {
            let t = piece.time_set();
            let (qs, vs) = (0..family.dof())
                .map(|j| joint_sets(family, j, &t, piece.phase))
                .unzip();
            positions.push(qs);
            velocities.push(vs);
        }
        Self {
            pieces,
            positions,
            velocities,
        }
    }

    pub fn dof(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    /// Per-joint position sets of one piece, for set-valued kinematics.
    pub fn piece_positions(&self, piece: usize) -> &[PolyZonotope<f64>] {
        &self.positions[piece]
    }
}

fn joint_sets(
    family: &TrajectoryFamily,
    j: usize,
    t: &PolyZonotope<f64>,
    phase: Phase,
) -> (PolyZonotope<f64>, PolyZonotope<f64>) {
    let (q0, v0, tp, tf) = (family.q0[j], family.qd0[j], family.t_plan, family.t_fin);
    let a = family.a_max[j];
    // k_j as a set: 0 + 1·x_{k_j}
    let k = PolyZonotope::new(0.0, alloc::vec![(Monomial::var(param_id(j)), 1.0)], Vec::new());
    let accel = k.scale(a);
    match phase {
        Phase::Plan => {
            let t2: PolyZonotope<f64> = t.mul(t);
            let q = t.scale(v0).translate(q0).minkowski_sum(&accel.mul(&t2).scale(0.5));
            let v = accel.mul(t).translate(v0);
            (q, v)
        }
        Phase::Brake => {
            let d = tf - tp;
            let q_plan = accel.scale(0.5 * tp * tp).translate(q0 + v0 * tp);
            let v_plan = accel.scale(tp).translate(v0);
            let u = t.translate(-tp);
            let u2: PolyZonotope<f64> = u.mul(&u);
            let shape = u.minkowski_sum(&u2.scale(-1.0 / (2.0 * d)));
            let q = q_plan.minkowski_sum(&v_plan.mul(&shape));
            let v = v_plan.mul(&u.scale(-1.0 / d).translate(1.0));
            (q, v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_family(rng: &mut ChaCha8Rng, n: usize) -> TrajectoryFamily {
        TrajectoryFamily::new(
            (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            0.5,
            1.0,
            (0..n).map(|_| rng.random_range(0.05..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn partition_formula() {
        let p = TimePartition::new(1.0, 2).unwrap();
        assert_eq!(p.intervals()[0].center(), 0.25);
        assert_eq!(p.intervals()[1].center(), 0.75);
        assert_eq!(p.intervals()[0].radius(), 0.25);
        let one = TimePartition::new(2.0, 1).unwrap();
        assert_eq!((one.intervals()[0].inf(), one.intervals()[0].sup()), (0.0, 2.0));
        assert_eq!(TimePartition::new(1.0, 0), Err(TrajectoryError::NoIntervals));
    }

    #[test]
    fn partition_tiles_horizon() {
        for n in [1, 3, 7, 40, 333] {
            let p = TimePartition::new(1.3, n).unwrap();
            let mut prev_hi = 0.0;
            for iv in p.intervals() {
                assert!((iv.inf() - prev_hi).abs() < 1e-12);
                assert!(iv.sup() > iv.inf());
                prev_hi = iv.sup();
            }
            assert!((prev_hi - 1.3).abs() < 1e-12);
        }
    }

    #[test]
    fn start_state_and_kinematics_example() {
        let f = TrajectoryFamily::uniform(vec![0.0], vec![1.0], 0.5, 1.0, 2.0).unwrap();
        let s0 = f.eval(&[-1.0], 0.0).unwrap();
        assert_eq!((s0.q[0], s0.qd[0]), (0.0, 1.0));
        let s = f.eval(&[-1.0], 0.5).unwrap();
        assert!((s.q[0] - 0.25).abs() < 1e-15);
        assert!(s.qd[0].abs() < 1e-15);
        assert_eq!(f.eval(&[0.0], 1.5), Err(TrajectoryError::TimeOutOfRange(1.5)));
        assert!(matches!(
            f.eval(&[1.5], 0.1),
            Err(TrajectoryError::ParameterOutOfRange { .. })
        ));
    }

    #[test]
    fn continuity_and_braking() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let f = random_family(&mut rng, 3);
            let k: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect();
            for j in 0..3 {
                let tp = f.t_plan;
                let below = f.joint_state(j, k[j], tp - 1e-13);
                let at = f.joint_state(j, k[j], tp);
                assert!((below.0 - at.0).abs() < 1e-12);
                assert!((below.1 - at.1).abs() < 1e-12);
                assert_eq!(f.joint_state(j, k[j], f.t_fin).1, 0.0);
            }
        }
    }

    #[test]
    fn coasting_piece_centers() {
        let f = TrajectoryFamily::uniform(vec![0.3], vec![0.8], 0.5, 1.0, 0.2).unwrap();
        let partition = TimePartition::new(1.0, 10).unwrap();
        let bundle = TrajectoryPzBundle::new(&f, &partition);
        for (p, piece) in bundle.pieces.iter().enumerate() {
            let q = bundle.positions[p][0].slice(param_id(0), 0.0).unwrap();
            // With k = 0 the remaining set is the time polynomial; its value at
            // the piece midpoint is the closed form.
            let mid = q.realize(|_| 0.0, &[]);
            let truth = f.joint_state(0, 0.0, 0.5 * (piece.start + piece.end)).0;
            assert!((mid - truth).abs() < 1e-12);
        }
    }

    #[test]
    fn straddling_interval_is_split() {
        let f = TrajectoryFamily::uniform(vec![0.0], vec![0.0], 0.5, 1.0, 0.2).unwrap();
        let partition = TimePartition::new(1.0, 3).unwrap();
        let bundle = TrajectoryPzBundle::new(&f, &partition);
        assert_eq!(bundle.pieces.len(), 4);
        assert_eq!(bundle.pieces[1].interval, 1);
        assert_eq!(bundle.pieces[2].interval, 1);
        assert_eq!(bundle.pieces[1].phase, Phase::Plan);
        assert_eq!(bundle.pieces[2].phase, Phase::Brake);
        assert_eq!(bundle.pieces[1].end, 0.5);
        let even = TrajectoryPzBundle::new(&f, &TimePartition::new(1.0, 40).unwrap());
        assert_eq!(even.pieces.len(), 40);
    }

    #[test]
    fn sliced_sets_contain_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n_t in [3, 7, 40] {
            let f = random_family(&mut rng, 2);
            let bundle = TrajectoryPzBundle::new(&f, &TimePartition::new(1.0, n_t).unwrap());
            for _ in 0..5000 {
                let p = rng.random_range(0..bundle.pieces.len());
                let piece = &bundle.pieces[p];
                let x: f64 = rng.random_range(-1.0..=1.0);
                let t = piece.time_at(x);
                for j in 0..2 {
                    let k: f64 = rng.random_range(-1.0..=1.0);
                    let (q, v) = f.joint_state(j, k, t);
                    let qs = bundle.positions[p][j].slice(param_id(j), k).unwrap();
                    let vs = bundle.velocities[p][j].slice(param_id(j), k).unwrap();
                    assert!(q >= qs.inf() - 1e-12 && q <= qs.sup() + 1e-12);
                    assert!(v >= vs.inf() - 1e-12 && v <= vs.sup() + 1e-12);
                    // Exact: slicing time too reproduces the value.
                    let exact = qs.slice(piece.time_id, x).unwrap();
                    assert!((exact.center() - q).abs() < 1e-12);
                    assert!(exact.is_point());
                }
            }
        }
    }

    #[test]
    fn sliced_width_shrinks_with_partition() {
        let f = TrajectoryFamily::uniform(vec![0.1, -0.4], vec![0.7, -0.2], 0.5, 1.0, 0.3).unwrap();
        let k = [0.4, -0.9];
        let mut widths = Vec::new();
        for n_t in [10, 100, 1000] {
            let bundle = TrajectoryPzBundle::new(&f, &TimePartition::new(1.0, n_t).unwrap());
            let dt = 1.0 / n_t as f64;
            let mut worst: f64 = 0.0;
            for (p, piece) in bundle.pieces.iter().enumerate() {
                for j in 0..2 {
                    let s = bundle.positions[p][j].slice(param_id(j), k[j]).unwrap();
                    let mid = f.joint_state(j, k[j], 0.5 * (piece.start + piece.end)).0;
                    // |q̇| ≤ 1 here, so the set stays within dt of the midpoint value.
                    assert!(s.sup() - mid <= dt + 1e-12 && mid - s.inf() <= dt + 1e-12);
                    worst = worst.max(s.sup() - s.inf());
                }
            }
            widths.push(worst);
        }
        assert!(widths[1] < widths[0] / 5.0 && widths[2] < widths[1] / 5.0, "{widths:?}");
    }

    #[test]
    fn only_time_ids_remain_after_parameter_slice() {
        let f = TrajectoryFamily::uniform(vec![0.0; 3], vec![0.5; 3], 0.5, 1.0, 0.2).unwrap();
        let bundle = TrajectoryPzBundle::new(&f, &TimePartition::new(1.0, 5).unwrap());
        for (p, row) in bundle.positions.iter().enumerate() {
            for (j, set) in row.iter().enumerate() {
                let s = set.slice(param_id(j), 0.3).unwrap();
                assert!(s.ids().iter().all(|id| *id == bundle.pieces[p].time_id));
            }
        }
    }
}
