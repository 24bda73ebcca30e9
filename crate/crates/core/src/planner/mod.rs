//! Trajectory optimization over the parameter box and the receding-horizon
//! loop around it.
//!
//! A planning problem fixes the current state, the obstacles and a cost. Its
//! constraints are joint position and velocity limits over every time piece
//! and a positive clearance between every occupancy sphere and every
//! obstacle, all as differentiable functions of `k`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Vector3};
use thiserror::Error;

use crate::geometry::ObstacleSolid;
use crate::kinematics::{KinematicChain, KinematicsError, PzfkOptions};
use crate::math;
use crate::occupancy::{build_sfo, build_sjo, OccupancyError, SjoEntry, DEFAULT_N_S};
use crate::pz::{IdKind, PolyZonotope};
use crate::trajectory::{TimePartition, TrajectoryError, TrajectoryFamily, TrajectoryPzBundle};

mod receding;
mod solver;

pub use receding::{
    plan_receding_horizon, straight_line_waypoint, Clock, ExecutedSegment, IterationRecord, NoClock, PlanReport,
    PlannerConfig, Termination,
};
pub use solver::{solve, Nlp, PlanOutcome, SolverOptions, SolverStats};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("expected {expected} joint values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("start configuration collides with obstacle {obstacle}")]
    StartInCollision { obstacle: usize },
    #[error("parameter k{index} = {value} is outside [-1, 1]")]
    ParameterOutOfRange { index: usize, value: f64 },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Occupancy(#[from] OccupancyError),
}

/// What a constraint row bounds. Limit rows are `limit - sup` (upper) or
/// `inf - limit` (lower); collision rows are `sdf - radius`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintLabel {
    Position {
        piece: usize,
        joint: usize,
        upper: bool,
    },
    Velocity {
        piece: usize,
        joint: usize,
        upper: bool,
    },
    Collision {
        piece: usize,
        link: usize,
        m: usize,
        obstacle: usize,
    },
}

/// Constraint values (feasible when nonnegative) and their Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBlock {
    pub values: Vec<f64>,
    /// Rows follow `values`, one column per trajectory parameter.
    pub jacobian: DMatrix<f64>,
    pub labels: Vec<ConstraintLabel>,
}

impl ConstraintBlock {
    /// Smallest value, `None` when there are no rows.
    pub fn min_value(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::min)
    }
}

/// Objective over `k`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cost {
    /// `‖q(t_plan; k) − waypoint‖²`
    Waypoint(Vec<f64>),
}

/// Cost value, gradient and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct CostEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl Cost {
    pub fn eval(&self, family: &TrajectoryFamily, k: &[f64]) -> CostEval {
        let n = family.dof();
        match self {
            Cost::Waypoint(target) => {
                let tp = family.t_plan;
                let mut value = 0.0;
                let mut gradient = DVector::zeros(n);
                let mut hessian = DMatrix::zeros(n, n);
                for j in 0..n {
                    let (q, _) = family.joint_state(j, k[j], tp);
                    let s = family.position_sensitivity(j, tp);
                    let r = q - target[j];
                    value += r * r;
                    gradient[j] = 2.0 * r * s;
                    hessian[(j, j)] = 2.0 * s * s;
                }
                CostEval {
                    value,
                    gradient,
                    hessian,
                }
            }
        }
    }
}

/// Knobs for building a planning problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemOptions {
    pub n_s: usize,
    pub pzfk: PzfkOptions,
    /// Rows whose value is provably above this for every `k` are dropped.
    /// `f64::INFINITY` keeps every row.
    pub prune_margin: f64,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        Self {
            n_s: DEFAULT_N_S,
            pzfk: PzfkOptions::default(),
            prune_margin: 0.05,
        }
    }
}

/// A scalar set polynomial in `k`, split as `center(k) ± Σ |g(k)| ± fixed`.
#[derive(Debug, Clone, PartialEq)]
struct ScalarBound {
    center: Vec<(Vec<(usize, u16)>, f64)>,
    groups: Vec<Vec<(Vec<(usize, u16)>, f64)>>,
    fixed: f64,
}

impl ScalarBound {
    fn new(p: &PolyZonotope<f64>) -> Self {
        let mut center = alloc::vec![(Vec::new(), p.center())];
        let mut keys: Vec<Vec<(crate::pz::IndeterminateId, u16)>> = Vec::new();
        let mut groups: Vec<Vec<(Vec<(usize, u16)>, f64)>> = Vec::new();
        for (m, g) in p.dependent() {
            let mut params = Vec::new();
            let mut other = Vec::new();
            for &(id, e) in m.terms() {
                if id.kind == IdKind::Param {
                    params.push((id.index as usize, e));
                } else {
                    other.push((id, e));
                }
            }
            if other.is_empty() {
                center.push((params, *g));
            } else if let Some(i) = keys.iter().position(|k| *k == other) {
                groups[i].push((params, *g));
            } else {
                keys.push(other);
                groups.push(alloc::vec![(params, *g)]);
            }
        }
        let fixed = p.independent().iter().map(|h| h.abs()).sum();
        Self { center, groups, fixed }
    }

    fn poly(terms: &[(Vec<(usize, u16)>, f64)], k: &[f64], grad: &mut [f64], sign: f64) -> f64 {
        let mut value = 0.0;
        for (vars, c) in terms {
            let mut w = *c;
            for &(v, e) in vars {
                w *= math::powi(k[v], i32::from(e));
            }
            value += w;
        }
        if sign != 0.0 {
            for (vars, c) in terms {
                for (a, &(v, e)) in vars.iter().enumerate() {
                    let mut d = c * f64::from(e) * math::powi(k[v], i32::from(e) - 1);
                    for (b, &(u, f)) in vars.iter().enumerate() {
                        if a != b {
                            d *= math::powi(k[u], i32::from(f));
                        }
                    }
                    grad[v] += sign * d;
                }
            }
        }
        value
    }

    /// `(center, radius)` with their gradients.
    fn eval(&self, k: &[f64]) -> (f64, Vec<f64>, f64, Vec<f64>) {
        let mut dc = alloc::vec![0.0; k.len()];
        let mut dr = alloc::vec![0.0; k.len()];
        let c = Self::poly(&self.center, k, &mut dc, 1.0);
        let mut r = self.fixed;
        for g in &self.groups {
            let v = Self::poly(g, k, &mut [], 0.0);
            let sign = if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            };
            Self::poly(g, k, &mut dr, sign);
            r += v.abs();
        }
        (c, dc, r, dr)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LimitRow {
    label: ConstraintLabel,
    bound: usize,
    limit: f64,
}

/// One trajectory-optimization problem: minimize the cost over the parameter
/// box subject to limit and clearance rows.
#[derive(Debug, Clone)]
pub struct PlanningProblem<'a> {
    chain: &'a KinematicChain,
    obstacles: &'a [ObstacleSolid],
    family: TrajectoryFamily,
    bundle: TrajectoryPzBundle,
    sjo: Vec<SjoEntry>,
    cost: Cost,
    n_s: usize,
    bounds: Vec<ScalarBound>,
    limit_rows: Vec<LimitRow>,
    /// Obstacles that can come close to link `j` in piece `p`, at
    /// `[p * links + j]`.
    near: Vec<Vec<usize>>,
}

impl<'a> PlanningProblem<'a> {
    pub fn new(
        chain: &'a KinematicChain,
        obstacles: &'a [ObstacleSolid],
        family: TrajectoryFamily,
        partition: &TimePartition,
        cost: Cost,
        options: &ProblemOptions,
    ) -> Result<Self, PlannerError> {
        let n = chain.dof();
        if family.dof() != n {
            return Err(PlannerError::LengthMismatch {
                expected: n,
                got: family.dof(),
            });
        }
        let Cost::Waypoint(w) = &cost;
        if w.len() != n {
            return Err(PlannerError::LengthMismatch {
                expected: n,
                got: w.len(),
            });
        }
        if options.n_s < 3 {
            return Err(OccupancyError::TooFewSpheres(options.n_s).into());
        }
        let bundle = TrajectoryPzBundle::new(&family, partition);
        let sjo = build_sjo(chain, &bundle, &options.pzfk)?;

        let mut bounds = Vec::new();
        let mut limit_rows = Vec::new();
        for (p, (qs, vs)) in bundle.positions.iter().zip(&bundle.velocities).enumerate() {
            for (joint, (q, v)) in qs.iter().zip(vs).enumerate() {
                let def = &chain.joints()[joint];
                for (set, (lo, hi), position) in [(q, def.q_limits, true), (v, def.qd_limits, false)] {
                    let (inf, sup) = (set.inf(), set.sup());
                    for (upper, slack, limit) in [(true, hi - sup, hi), (false, inf - lo, lo)] {
                        if slack > options.prune_margin {
                            continue;
                        }
                        let label = if position {
                            ConstraintLabel::Position { piece: p, joint, upper }
                        } else {
                            ConstraintLabel::Velocity { piece: p, joint, upper }
                        };
                        limit_rows.push(LimitRow {
                            label,
                            bound: bounds.len(),
                            limit,
                        });
                    }
                    if limit_rows.last().is_some_and(|r| r.bound == bounds.len()) {
                        bounds.push(ScalarBound::new(set));
                    }
                }
            }
        }

        let spheres = chain.sphere_count();
        let links = spheres.saturating_sub(1).max(1);
        let mut near = Vec::with_capacity(bundle.pieces.len() * links);
        for block in sjo.chunks(spheres) {
            for j in 0..links {
                let ends: &[SjoEntry] = if spheres == 1 { &block[..1] } else { &block[j..j + 2] };
                near.push(
                    obstacles
                        .iter()
                        .enumerate()
                        .filter(|(_, o)| link_lower_bound(ends, options.n_s, o) <= options.prune_margin)
                        .map(|(n, _)| n)
                        .collect(),
                );
            }
        }

        Ok(Self {
            chain,
            obstacles,
            family,
            bundle,
            sjo,
            cost,
            n_s: options.n_s,
            bounds,
            limit_rows,
            near,
        })
    }

    pub fn chain(&self) -> &KinematicChain {
        self.chain
    }

    pub fn obstacles(&self) -> &[ObstacleSolid] {
        self.obstacles
    }

    pub fn family(&self) -> &TrajectoryFamily {
        &self.family
    }

    pub fn bundle(&self) -> &TrajectoryPzBundle {
        &self.bundle
    }

    pub fn sjo(&self) -> &[SjoEntry] {
        &self.sjo
    }

    pub fn cost(&self) -> &Cost {
        &self.cost
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    /// Number of rows `eval_constraints` returns.
    pub fn row_count(&self) -> usize {
        let links = self.near.len() / self.bundle.pieces.len().max(1);
        let spheres = self.chain.sphere_count();
        let collision: usize = self
            .near
            .iter()
            .enumerate()
            .map(|(idx, obs)| {
                let j = idx % links;
                let per_link = if spheres == 1 {
                    1
                } else if j + 1 == links {
                    self.n_s
                } else {
                    self.n_s - 1
                };
                per_link * obs.len()
            })
            .sum();
        self.limit_rows.len() + collision
    }

    fn check_k(&self, k: &[f64]) -> Result<(), PlannerError> {
        let n = self.chain.dof();
        if k.len() != n {
            return Err(PlannerError::LengthMismatch {
                expected: n,
                got: k.len(),
            });
        }
        match k.iter().position(|v| !(v.abs() <= 1.0)) {
            Some(index) => Err(PlannerError::ParameterOutOfRange { index, value: k[index] }),
            None => Ok(()),
        }
    }

    /// Every constraint value and its Jacobian at `k`, ordered limits first
    /// (by piece, joint, position before velocity, upper before lower) and
    /// then clearances by (piece, link, m, obstacle).
    pub fn eval_constraints(&self, k: &[f64]) -> Result<ConstraintBlock, PlannerError> {
        self.check_k(k)?;
        let n = k.len();
        let mut values = Vec::with_capacity(self.row_count());
        let mut jac: Vec<f64> = Vec::with_capacity(self.row_count() * n);
        let mut labels = Vec::with_capacity(self.row_count());

        let mut cache: Option<(usize, (f64, Vec<f64>, f64, Vec<f64>))> = None;
        for row in &self.limit_rows {
            if cache.as_ref().is_none_or(|(b, _)| *b != row.bound) {
                cache = Some((row.bound, self.bounds[row.bound].eval(k)));
            }
            let (_, (c, dc, r, dr)) = cache.as_ref().expect("filled above");
            let upper = matches!(
                row.label,
                ConstraintLabel::Position { upper: true, .. } | ConstraintLabel::Velocity { upper: true, .. }
            );
            if upper {
                values.push(row.limit - (c + r));
                jac.extend(dc.iter().zip(dr).map(|(a, b)| -(a + b)));
            } else {
                values.push(c - r - row.limit);
                jac.extend(dc.iter().zip(dr).map(|(a, b)| a - b));
            }
            labels.push(row.label);
        }

        let spheres = self.chain.sphere_count();
        let links = spheres.saturating_sub(1).max(1);
        for (p, block) in self.sjo.chunks(spheres).enumerate() {
            let near = &self.near[p * links..(p + 1) * links];
            if near.iter().all(Vec::is_empty) {
                continue;
            }
            let diff = block.iter().map(|e| e.slice_diff(k)).collect::<Result<Vec<_>, _>>()?;
            for (j, obs) in near.iter().enumerate() {
                if obs.is_empty() {
                    continue;
                }
                let chain_spheres = if spheres == 1 {
                    alloc::vec![diff[0].clone()]
                } else {
                    let mut s = build_sfo(&diff[j], &diff[j + 1], self.n_s)?;
                    if j + 1 != links {
                        s.pop();
                    }
                    s
                };
                for (m, s) in chain_spheres.iter().enumerate() {
                    for &o in obs {
                        let d = self.obstacles[o].sdf_detail(&s.center);
                        values.push(d.distance - s.radius);
                        jac.extend((0..n).map(|v| d.gradient.dot(&s.center_jacobian[v]) - s.radius_gradient[v]));
                        labels.push(ConstraintLabel::Collision {
                            piece: p,
                            link: j,
                            m: m + 1,
                            obstacle: o,
                        });
                    }
                }
            }
        }
        let rows = values.len();
        Ok(ConstraintBlock {
            values,
            jacobian: DMatrix::from_row_slice(rows, n, &jac),
            labels,
        })
    }

    pub fn eval_cost(&self, k: &[f64]) -> CostEval {
        self.cost.eval(&self.family, k)
    }
}

/// Lower bound on `sdf − radius` over every sphere the link can produce for
/// any `k`.
fn link_lower_bound(ends: &[SjoEntry], n_s: usize, obstacle: &ObstacleSolid) -> f64 {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    let mut r_max: f64 = 0.0;
    for e in ends {
        lo = lo.inf(&e.center_pz.inf());
        hi = hi.sup(&e.center_pz.sup());
        r_max = r_max.max(e.radius);
    }
    let half_diag = ((hi - lo) * 0.5).norm();
    // Interior spheres: radius at most sqrt(r_max² + s²) with s bounded by
    // the box diagonal.
    let s_max = 2.0 * half_diag / (2 * (n_s.max(3) - 2)) as f64;
    let radius = math::sqrt(r_max * r_max + s_max * s_max);
    let mid = (lo + hi) * 0.5;
    (mid - obstacle.center()).norm() - half_diag - obstacle.bounding_radius() - radius
}

impl Nlp for PlanningProblem<'_> {
    fn dim(&self) -> usize {
        self.chain.dof()
    }

    fn cost(&self, k: &[f64]) -> CostEval {
        self.eval_cost(k)
    }

    fn constraints(&self, k: &[f64]) -> ConstraintBlock {
        self.eval_constraints(k).expect("solver keeps k inside the box")
    }
}
