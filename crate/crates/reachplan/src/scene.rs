//! Scenes: a chain, obstacles and a start/goal pair, plus the seeded random
//! generator for benchmark trials.

use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reachplan_core::kinematics::KinematicsError;
use reachplan_core::{GeometryError, KinematicChain, ObstacleSolid, Vector3};
use thiserror::Error;

use crate::ground_truth::{configuration_clearance, AXIS_STEP};
use crate::schema::{ChainDto, ChainRef, ObstacleDto, SceneDto};

/// Start and goal keep at least this clearance from generated obstacles.
pub const START_GOAL_CLEARANCE: f64 = 0.01;
/// Obstacle centers are drawn at least this fraction of the reach away from
/// the base.
pub const INNER_REACH_FRACTION: f64 = 0.25;
const REJECTION_BUDGET: usize = 100_000;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("unknown chain fixture {0:?}")]
    UnknownFixture(String),
    #[error("chain: {0}")]
    Chain(#[from] KinematicsError),
    #[error("obstacle {index}: {source}")]
    Obstacle { index: usize, source: GeometryError },
    #[error("{which} has {got} values, chain has {expected} joints")]
    ConfigLength {
        which: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{which} configuration collides with obstacle {obstacle} (clearance {clearance:.4} m)")]
    InCollision {
        which: &'static str,
        obstacle: usize,
        clearance: f64,
    },
    #[error("rejection budget exhausted placing obstacle {0}")]
    TooDense(usize),
}

pub fn fixture_chain(name: &str) -> Result<ChainDto, SceneError> {
    let text = match name {
        "3dof" => include_str!("../fixtures/chain_3dof.json"),
        "7dof" => include_str!("../fixtures/chain_7dof.json"),
        _ => return Err(SceneError::UnknownFixture(name.to_string())),
    };
    Ok(serde_json::from_str(text).expect("fixtures are valid"))
}

pub fn resolve_chain(chain: &ChainRef) -> Result<ChainDto, SceneError> {
    match chain {
        ChainRef::Fixture(name) => fixture_chain(name),
        ChainRef::Inline(dto) => Ok(dto.clone()),
    }
}

/// A validated scene.
#[derive(Debug, Clone)]
pub struct Scene {
    pub chain: KinematicChain,
    pub obstacles: Vec<ObstacleSolid>,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    pub seed: u64,
    pub label: String,
}

impl Scene {
    /// Builds every part and checks that start and goal are collision-free.
    pub fn from_dto(dto: &SceneDto) -> Result<Self, SceneError> {
        let chain = resolve_chain(&dto.chain)?.build()?;
        let obstacles = dto
            .obstacles
            .iter()
            .enumerate()
            .map(|(index, o)| o.build().map_err(|source| SceneError::Obstacle { index, source }))
            .collect::<Result<Vec<_>, _>>()?;
        for (which, q) in [("start", &dto.start), ("goal", &dto.goal)] {
            if q.len() != chain.dof() {
                return Err(SceneError::ConfigLength {
                    which,
                    expected: chain.dof(),
                    got: q.len(),
                });
            }
            if let Some((_, obstacle, clearance)) = configuration_clearance(&chain, &obstacles, q, AXIS_STEP) {
                if clearance <= 0.0 {
                    return Err(SceneError::InCollision {
                        which,
                        obstacle,
                        clearance,
                    });
                }
            }
        }
        Ok(Self {
            chain,
            obstacles,
            start: dto.start.clone(),
            goal: dto.goal.clone(),
            seed: dto.seed,
            label: dto.label.clone(),
        })
    }
}

fn random_config(rng: &mut ChaCha8Rng, chain: &KinematicChain) -> Vec<f64> {
    chain
        .joints()
        .iter()
        .map(|j| {
            let (lo, hi) = (j.q_limits.0.max(-PI), j.q_limits.1.min(PI));
            rng.random_range(lo..=hi)
        })
        .collect()
}

/// Random scene on fixture `chain`: start and goal uniform within the joint
/// limits (clipped to `[-π, π]`), then `n_obstacles` axis-aligned cubes of
/// edge `edge_len` with centers uniform in the shell between
/// `INNER_REACH_FRACTION · reach` and `reach` around the base, each rejected
/// while it comes within `START_GOAL_CLEARANCE` of the start or goal arm.
pub fn generate_random_scene(
    chain: &str,
    seed: u64,
    n_obstacles: usize,
    edge_len: f64,
) -> Result<SceneDto, SceneError> {
    let dto = fixture_chain(chain)?;
    let built = dto.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_config(&mut rng, &built);
    let goal = random_config(&mut rng, &built);
    let base = *built.base_translation();
    let outer = built.reach();
    let inner = INNER_REACH_FRACTION * outer;
    let half = Vector3::repeat(0.5 * edge_len);

    let mut obstacles = Vec::with_capacity(n_obstacles);
    let mut attempts = 0;
    while obstacles.len() < n_obstacles {
        attempts += 1;
        if attempts > REJECTION_BUDGET {
            return Err(SceneError::TooDense(obstacles.len()));
        }
        let dir = loop {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n = v.norm();
            if n > 1e-6 && n <= 1.0 {
                break v / n;
            }
        };
        // Uniform in volume between the two radii.
        let u: f64 = rng.random_range(0.0..1.0);
        let r = (inner.powi(3) + u * (outer.powi(3) - inner.powi(3))).cbrt();
        let center = base + dir * r;
        let solid = ObstacleSolid::axis_aligned_box(center, half).map_err(|source| SceneError::Obstacle {
            index: obstacles.len(),
            source,
        })?;
        let clear = [&start, &goal].iter().all(|q| {
            configuration_clearance(&built, std::slice::from_ref(&solid), q, AXIS_STEP)
                .is_none_or(|(_, _, d)| d > START_GOAL_CLEARANCE)
        });
        if clear {
            obstacles.push(ObstacleDto::Box {
                center: center.into(),
                half_widths: half.into(),
            });
        }
    }
    Ok(SceneDto {
        chain: ChainRef::Fixture(chain.to_string()),
        obstacles,
        start,
        goal,
        seed,
        label: format!("random-{chain}-{n_obstacles}-{seed}"),
    })
}
