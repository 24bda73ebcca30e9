//! Batches of seeded random trials with aggregate statistics.

use rayon::prelude::*;
use reachplan_core::planner::{plan_receding_horizon, Clock, NoClock, PlanReport, PlannerConfig, PlannerError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ground_truth::{ground_truth_collision_check, Verdict, DEFAULT_DT_FINE};
use crate::scene::{generate_random_scene, Scene, SceneError};
use crate::schema::{SceneDto, StatusDto};
use crate::WallClock;

pub const DEFAULT_EDGE_LEN: f64 = 0.2;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("trial {trial}: {source}")]
    Scene { trial: usize, source: SceneError },
    #[error("trial {trial}: {source}")]
    Planner { trial: usize, source: PlannerError },
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Fixture name, `"3dof"` or `"7dof"`.
    pub chain: String,
    pub n_obstacles: usize,
    pub edge_len: f64,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    pub planner: PlannerConfig,
    /// Measure wall-clock time. Timing fields make the stats
    /// machine-dependent, so they are off by default.
    pub timing: bool,
    pub dt_fine: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            chain: "7dof".to_string(),
            n_obstacles: 10,
            edge_len: DEFAULT_EDGE_LEN,
            trials: 100,
            seed: 0,
            jobs: 0,
            planner: PlannerConfig::default(),
            timing: false,
            dt_fine: DEFAULT_DT_FINE,
        }
    }
}

/// Seed of trial `trial` in an experiment seeded with `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    pub status: StatusDto,
    pub iterations: usize,
    pub feasible_iterations: usize,
    pub collision: bool,
    pub min_clearance: Option<f64>,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub mean_planning_ms: f64,
    pub stdev_planning_ms: f64,
    pub mean_constraint_eval_ms: f64,
    pub stdev_constraint_eval_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub chain: String,
    pub n_obstacles: usize,
    pub seed: u64,
    pub trials: usize,
    pub successes: usize,
    pub collisions: usize,
    pub safe_stops: usize,
    pub failures: usize,
    pub success_rate: f64,
    pub mean_iterations: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingStats>,
    pub per_trial: Vec<TrialSummary>,
}

/// Everything produced by one trial.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub scene: SceneDto,
    pub report: PlanReport,
    pub verdict: Verdict,
}

pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<TrialOutput, ExperimentError> {
    let seed = trial_seed(config.seed, trial);
    let dto = generate_random_scene(&config.chain, seed, config.n_obstacles, config.edge_len)
        .map_err(|source| ExperimentError::Scene { trial, source })?;
    let scene = Scene::from_dto(&dto).map_err(|source| ExperimentError::Scene { trial, source })?;
    let wall = WallClock::new();
    let clock: &dyn Clock = if config.timing { &wall } else { &NoClock };
    let report = plan_receding_horizon(
        &scene.chain,
        &scene.obstacles,
        &scene.start,
        &scene.goal,
        &config.planner,
        clock,
    )
    .map_err(|source| ExperimentError::Planner { trial, source })?;
    let verdict = ground_truth_collision_check(&scene.chain, &scene.obstacles, &report.executed, config.dt_fine);
    Ok(TrialOutput {
        scene: dto,
        report,
        verdict,
    })
}

fn mean_stdev(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs every trial (in parallel across `jobs` threads) and aggregates in
/// trial order. `on_trial` sees each finished trial, also in trial order.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    mut on_trial: impl FnMut(usize, &TrialOutput),
) -> Result<ExperimentStats, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build()?;
    let outputs: Vec<Result<TrialOutput, ExperimentError>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t))
            .collect()
    });

    let mut per_trial = Vec::with_capacity(config.trials);
    let mut solve_ms = Vec::new();
    let mut eval_ms = Vec::new();
    for (trial, out) in outputs.into_iter().enumerate() {
        let out = out?;
        on_trial(trial, &out);
        for it in &out.report.iterations {
            solve_ms.push(it.solve_ms);
            eval_ms.push(it.constraint_eval_ms);
        }
        per_trial.push(TrialSummary {
            trial,
            seed: trial_seed(config.seed, trial),
            status: out.report.status.into(),
            iterations: out.report.iterations.len(),
            feasible_iterations: out.report.iterations.iter().filter(|i| i.feasible).count(),
            collision: out.verdict.collision,
            min_clearance: out.verdict.min_clearance,
            duration_s: out.report.duration(),
        });
    }
    // A colliding trial counts as a collision whatever its planner status,
    // so the four outcome counts partition the trials.
    let count = |s: StatusDto| per_trial.iter().filter(|t| !t.collision && t.status == s).count();
    let successes = count(StatusDto::Success);
    let trials = per_trial.len();
    let timing = config.timing.then(|| {
        let (mean_planning_ms, stdev_planning_ms) = mean_stdev(&solve_ms);
        let (mean_constraint_eval_ms, stdev_constraint_eval_ms) = mean_stdev(&eval_ms);
        TimingStats {
            mean_planning_ms,
            stdev_planning_ms,
            mean_constraint_eval_ms,
            stdev_constraint_eval_ms,
        }
    });
    Ok(ExperimentStats {
        chain: config.chain.clone(),
        n_obstacles: config.n_obstacles,
        seed: config.seed,
        trials,
        successes,
        collisions: per_trial.iter().filter(|t| t.collision).count(),
        safe_stops: count(StatusDto::SafeStop),
        failures: count(StatusDto::Failure),
        success_rate: if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        },
        mean_iterations: mean_stdev(&per_trial.iter().map(|t| t.iterations as f64).collect::<Vec<_>>()).0,
        timing,
        per_trial,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentStats, ExperimentError> {
    run_experiment_with(config, |_, _| {})
}
