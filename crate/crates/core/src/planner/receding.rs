//! Receding-horizon execution: plan from the state the committed trajectory
//! reaches at `t_plan`, commit on success, otherwise fall back to the
//! committed trajectory's braking phase.

use alloc::vec::Vec;

use super::solver::{solve, SolverOptions};
use super::{Cost, PlannerError, PlanningProblem, ProblemOptions};
use crate::geometry::ObstacleSolid;
use crate::kinematics::KinematicChain;
use crate::math;
use crate::trajectory::{TimePartition, TrajectoryFamily, DEFAULT_A_MAX, DEFAULT_N_T, DEFAULT_T_FIN, DEFAULT_T_PLAN};

/// Source of elapsed milliseconds for solver statistics.
pub trait Clock {
    fn now_ms(&self) -> f64;
}

/// A clock that never advances; timing fields stay zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ms(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub t_plan: f64,
    pub t_fin: f64,
    pub n_t: usize,
    pub a_max: f64,
    /// Planning iterations before giving up with a safe stop.
    pub max_iters: usize,
    /// Goal reached when `‖q − q_goal‖∞` is below this, rad.
    pub goal_tolerance: f64,
    /// Cruise speed cap for the straight-line waypoint, rad/s.
    pub speed_cap: f64,
    pub problem: ProblemOptions,
    pub solver: SolverOptions,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            t_plan: DEFAULT_T_PLAN,
            t_fin: DEFAULT_T_FIN,
            n_t: DEFAULT_N_T,
            a_max: DEFAULT_A_MAX,
            max_iters: 150,
            goal_tolerance: 0.05,
            speed_cap: 1.0,
            problem: ProblemOptions::default(),
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The final plan ends within tolerance of the goal.
    Success,
    /// Iteration budget exhausted; the last plan's braking phase was run.
    SafeStop,
    /// Two consecutive failed solves, or a failure before any plan.
    Failure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub feasible: bool,
    pub k: Vec<f64>,
    pub solve_ms: f64,
    pub constraint_eval_ms: f64,
    pub min_margin: Option<f64>,
    pub solver_iterations: usize,
}

/// A piece of motion that was actually executed: `family` at parameter `k`
/// over local times `[from, to]`, starting at global time `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutedSegment {
    pub start: f64,
    pub family: TrajectoryFamily,
    pub k: Vec<f64>,
    pub from: f64,
    pub to: f64,
}

impl ExecutedSegment {
    pub fn duration(&self) -> f64 {
        self.to - self.from
    }

    /// Configuration at global time `t`, clamped to the segment.
    pub fn config_at(&self, t: f64) -> Vec<f64> {
        let local = (t - self.start + self.from).clamp(self.from, self.to);
        (0..self.family.dof())
            .map(|j| self.family.joint_state(j, self.k[j], local).0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub iterations: Vec<IterationRecord>,
    pub status: Termination,
    pub executed: Vec<ExecutedSegment>,
    pub final_config: Vec<f64>,
}

impl PlanReport {
    pub fn duration(&self) -> f64 {
        self.executed.iter().map(ExecutedSegment::duration).sum()
    }
}

/// Target for `q(t_plan)`: move along the straight line to the goal at a
/// speed that still allows stopping within the acceleration bound.
pub fn straight_line_waypoint(
    q: &[f64],
    qd: &[f64],
    goal: &[f64],
    a_max: f64,
    t_plan: f64,
    speed_cap: f64,
) -> Vec<f64> {
    let dist = q.iter().zip(goal).map(|(a, b)| (b - a).abs()).fold(0.0, f64::max);
    let speed = if dist > 0.0 {
        speed_cap.min(math::sqrt(a_max * dist))
    } else {
        0.0
    };
    (0..q.len())
        .map(|j| {
            let dir = if dist > 0.0 { (goal[j] - q[j]) / dist } else { 0.0 };
            q[j] + 0.5 * (qd[j] + speed * dir) * t_plan
        })
        .collect()
}

/// Runs planning iterations from rest at `start` toward `goal`.
pub fn plan_receding_horizon(
    chain: &KinematicChain,
    obstacles: &[ObstacleSolid],
    start: &[f64],
    goal: &[f64],
    config: &PlannerConfig,
    clock: &dyn Clock,
) -> Result<PlanReport, PlannerError> {
    let n = chain.dof();
    for v in [start, goal] {
        if v.len() != n {
            return Err(PlannerError::LengthMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    let radii = chain.sphere_radii();
    let centers = chain.sphere_centers(start)?;
    for (o, obstacle) in obstacles.iter().enumerate() {
        if centers.iter().zip(&radii).any(|(c, r)| obstacle.sdf(c) <= *r) {
            return Err(PlannerError::StartInCollision { obstacle: o });
        }
    }
    let partition = TimePartition::new(config.t_fin, config.n_t)?;

    let mut q = start.to_vec();
    let mut qd = alloc::vec![0.0; n];
    let mut clock_time = 0.0;
    let mut committed: Option<(TrajectoryFamily, Vec<f64>)> = None;
    let mut failures = 0;
    let mut iterations = Vec::new();
    let mut executed = Vec::new();
    let mut status = Termination::SafeStop;

    let mut run = |family: &TrajectoryFamily, k: &[f64], from: f64, to: f64, clock_time: &mut f64| {
        executed.push(ExecutedSegment {
            start: *clock_time,
            family: family.clone(),
            k: k.to_vec(),
            from,
            to,
        });
        *clock_time += to - from;
    };

    for iter in 0..config.max_iters {
        let family = TrajectoryFamily::uniform(q.clone(), qd.clone(), config.t_plan, config.t_fin, config.a_max)?;
        let waypoint = straight_line_waypoint(&q, &qd, goal, config.a_max, config.t_plan, config.speed_cap);
        let problem = PlanningProblem::new(
            chain,
            obstacles,
            family.clone(),
            &partition,
            Cost::Waypoint(waypoint),
            &config.problem,
        )?;
        let outcome = solve(&problem, &alloc::vec![0.0; n], &config.solver, clock);
        iterations.push(IterationRecord {
            iter,
            feasible: outcome.is_feasible(),
            k: outcome.k_star.clone().unwrap_or_default(),
            solve_ms: outcome.stats.solve_ms,
            constraint_eval_ms: outcome.stats.constraint_eval_ms,
            min_margin: outcome.min_margin,
            solver_iterations: outcome.stats.iterations,
        });
        match outcome.k_star {
            Some(k) => {
                failures = 0;
                let end = family.eval(&k, config.t_fin)?;
                let reached = end
                    .q
                    .iter()
                    .zip(goal)
                    .all(|(a, b)| (a - b).abs() < config.goal_tolerance);
                if reached {
                    run(&family, &k, 0.0, config.t_fin, &mut clock_time);
                    q = end.q;
                    committed = None;
                    status = Termination::Success;
                    break;
                }
                run(&family, &k, 0.0, config.t_plan, &mut clock_time);
                let next = family.eval(&k, config.t_plan)?;
                q = next.q;
                qd = next.qd;
                committed = Some((family, k));
            }
            None => {
                failures += 1;
                if let Some((f, k)) = committed.take() {
                    run(&f, &k, config.t_plan, config.t_fin, &mut clock_time);
                    q = f.eval(&k, config.t_fin)?.q;
                    qd = alloc::vec![0.0; n];
                }
                if iter == 0 || failures >= 2 {
                    status = Termination::Failure;
                    break;
                }
            }
        }
    }
    if let Some((f, k)) = committed.take() {
        run(&f, &k, config.t_plan, config.t_fin, &mut clock_time);
        q = f.eval(&k, config.t_fin)?.q;
    }
    Ok(PlanReport {
        iterations,
        status,
        executed,
        final_config: q,
    })
}
