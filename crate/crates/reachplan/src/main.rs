use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use reachplan::experiment::{run_experiment_with, ExperimentConfig, DEFAULT_EDGE_LEN};
use reachplan::ground_truth::{ground_truth_collision_check, DEFAULT_DT_FINE};
use reachplan::schema::{
    sample_trajectory, to_json_string, ObstacleDto, PlanReportDto, SceneDto, SdfDto, SphereDumpDto, StatusDto,
};
use reachplan::{Scene, WallClock};
use reachplan_core::occupancy::{build_sjo, forward_occupancy};
use reachplan_core::planner::{plan_receding_horizon, PlannerConfig};
use reachplan_core::{SdfCase, TimePartition, TrajectoryFamily, TrajectoryPzBundle, Vector3};

#[derive(Parser)]
#[command(
    name = "reachplan",
    version,
    about = "Reachability-based safe arm trajectory planning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan from the scene's start to its goal and write the report.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the executed motion sampled every `--sample-dt` seconds.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        sample_dt: f64,
        #[command(flatten)]
        planner: PlannerArgs,
    },
    /// Run seeded random trials and write aggregate statistics.
    Bench {
        #[arg(long, default_value = "7", value_parser = ["3", "7"])]
        dof: String,
        #[arg(long, default_value_t = 10)]
        n_obstacles: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Record wall-clock timing in the statistics.
        #[arg(long)]
        timing: bool,
        /// Directory for per-trial scene and report files.
        #[arg(long)]
        reports: Option<PathBuf>,
        #[command(flatten)]
        planner: PlannerArgs,
    },
    /// Signed distance from a point to an obstacle.
    Sdf {
        #[arg(long)]
        obstacle: PathBuf,
        #[arg(long, value_parser = parse_point)]
        point: Vector3<f64>,
    },
    /// Dump the forward-occupancy spheres of the first plan at a given `k`.
    DumpReachsets {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        k: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        planner: PlannerArgs,
    },
}

#[derive(Args, Clone)]
struct PlannerArgs {
    #[arg(long, default_value_t = 5)]
    n_s: usize,
    #[arg(long, default_value_t = 40)]
    n_t: usize,
    #[arg(long, default_value_t = std::f64::consts::PI / 24.0)]
    a_max: f64,
    #[arg(long, default_value_t = 0.5)]
    t_plan: f64,
    #[arg(long, default_value_t = 1.0)]
    t_fin: f64,
    #[arg(long, default_value_t = 150)]
    max_iters: usize,
}

impl PlannerArgs {
    fn config(&self) -> PlannerConfig {
        let mut c = PlannerConfig {
            t_plan: self.t_plan,
            t_fin: self.t_fin,
            n_t: self.n_t,
            a_max: self.a_max,
            max_iters: self.max_iters,
            ..PlannerConfig::default()
        };
        c.problem.n_s = self.n_s;
        c
    }
}

fn parse_point(s: &str) -> Result<Vector3<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Vector3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {} values", v.len())),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?).with_context(|| format!("writing {}", path.display()))
}

fn load_scene(path: &Path) -> Result<Scene> {
    let dto: SceneDto = read_json(path)?;
    Scene::from_dto(&dto).with_context(|| format!("invalid scene {}", path.display()))
}

fn plan(scene: &Path, out: &Path, trajectory: Option<(&Path, f64)>, args: &PlannerArgs) -> Result<ExitCode> {
    let scene = load_scene(scene)?;
    let config = args.config();
    let report = plan_receding_horizon(
        &scene.chain,
        &scene.obstacles,
        &scene.start,
        &scene.goal,
        &config,
        &WallClock::new(),
    )?;
    let verdict = ground_truth_collision_check(&scene.chain, &scene.obstacles, &report.executed, DEFAULT_DT_FINE);
    let mut dto = PlanReportDto::from(&report);
    dto.ground_truth = Some(verdict);
    write_json(out, &dto)?;
    if let Some((path, dt)) = trajectory {
        if !(dt > 0.0) {
            bail!("--sample-dt must be positive");
        }
        write_json(path, &sample_trajectory(&report.executed, dt))?;
    }
    eprintln!(
        "{:?} after {} iterations, {:.1} s of motion",
        dto.status,
        dto.iterations.len(),
        report.duration()
    );
    Ok(ExitCode::from(dto.status.exit_code() as u8))
}

#[allow(clippy::too_many_arguments)]
fn bench(
    dof: &str,
    n_obstacles: usize,
    trials: usize,
    seed: u64,
    out: &Path,
    jobs: usize,
    timing: bool,
    reports: Option<&Path>,
    args: &PlannerArgs,
) -> Result<ExitCode> {
    let config = ExperimentConfig {
        chain: format!("{dof}dof"),
        n_obstacles,
        edge_len: DEFAULT_EDGE_LEN,
        trials,
        seed,
        jobs,
        planner: args.config(),
        timing,
        dt_fine: DEFAULT_DT_FINE,
    };
    if let Some(dir) = reports {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut io_error = None;
    let stats = run_experiment_with(&config, |trial, output| {
        let Some(dir) = reports else { return };
        let mut report = PlanReportDto::from(&output.report);
        report.ground_truth = Some(output.verdict.clone());
        let written = write_json(&dir.join(format!("trial_{trial:04}_scene.json")), &output.scene)
            .and_then(|_| write_json(&dir.join(format!("trial_{trial:04}_report.json")), &report));
        if let Err(e) = written {
            io_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    write_json(out, &stats)?;
    eprintln!(
        "{} trials: {} successes, {} collisions, {} safe stops, {} failures",
        stats.trials, stats.successes, stats.collisions, stats.safe_stops, stats.failures
    );
    Ok(if stats.collisions > 0 {
        ExitCode::from(StatusDto::Failure.exit_code() as u8)
    } else {
        ExitCode::SUCCESS
    })
}

fn sdf(obstacle: &Path, point: &Vector3<f64>) -> Result<ExitCode> {
    let dto: ObstacleDto = read_json(obstacle)?;
    let solid = dto.build()?;
    let r = solid.sdf_detail(point);
    let case = match r.case {
        SdfCase::Interior { .. } => "interior",
        SdfCase::Face { .. } => "face",
        SdfCase::Edge { .. } => "edge",
    };
    print!(
        "{}",
        to_json_string(&SdfDto {
            distance: r.distance,
            gradient: r.gradient.into(),
            case: case.to_string(),
        })?
    );
    Ok(ExitCode::SUCCESS)
}

fn dump_reachsets(scene: &Path, k: &[f64], out: &Path, args: &PlannerArgs) -> Result<ExitCode> {
    let scene = load_scene(scene)?;
    let config = args.config();
    let n = scene.chain.dof();
    if k.len() != n {
        bail!("--k has {} values, chain has {n} joints", k.len());
    }
    let family = TrajectoryFamily::uniform(
        scene.start.clone(),
        vec![0.0; n],
        config.t_plan,
        config.t_fin,
        config.a_max,
    )?;
    let partition = TimePartition::new(config.t_fin, config.n_t)?;
    let bundle = TrajectoryPzBundle::new(&family, &partition);
    let sjo = build_sjo(&scene.chain, &bundle, &config.problem.pzfk)?;
    let spheres = forward_occupancy(&sjo, scene.chain.sphere_count(), k, config.problem.n_s)?;
    let dump: Vec<SphereDumpDto> = spheres
        .iter()
        .map(|s| SphereDumpDto {
            j: s.link,
            i: s.interval,
            piece: s.piece,
            m: s.m,
            center: s.sphere.center.into(),
            radius: s.sphere.radius,
        })
        .collect();
    write_json(out, &dump)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Plan {
            scene,
            out,
            trajectory,
            sample_dt,
            planner,
        } => plan(&scene, &out, trajectory.as_deref().map(|p| (p, sample_dt)), &planner),
        Command::Bench {
            dof,
            n_obstacles,
            trials,
            seed,
            out,
            jobs,
            timing,
            reports,
            planner,
        } => bench(
            &dof,
            n_obstacles,
            trials,
            seed,
            &out,
            jobs,
            timing,
            reports.as_deref(),
            &planner,
        ),
        Command::Sdf { obstacle, point } => sdf(&obstacle, &point),
        Command::DumpReachsets { scene, k, out, planner } => dump_reachsets(&scene, &k, &out, &planner),
    }
}
