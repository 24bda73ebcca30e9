//! File formats, random benchmark scenes, a ground-truth collision checker
//! and the experiment runner built on `reachplan-core`.

pub mod experiment;
pub mod ground_truth;
pub mod scene;
pub mod schema;

use std::time::Instant;

use reachplan_core::planner::Clock;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentStats, TrialSummary};
pub use ground_truth::{ground_truth_collision_check, Verdict};
pub use scene::{fixture_chain, generate_random_scene, Scene, SceneError};

/// Milliseconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock {
    origin: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now_ms(&self) -> f64 {
        self.origin.elapsed().as_secs_f64() * 1e3
    }
}
