//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. A criterion number on the command line runs
//! only that one, e.g. `cargo test --test acceptance -- 6`.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reachplan::experiment::{run_experiment, ExperimentConfig};
use reachplan::scene::{fixture_chain, generate_random_scene, Scene};
use reachplan_core::occupancy::{build_pz_link_occupancy, link_boxes, TaperedCapsule};
use reachplan_core::planner::{Cost, PlanningProblem, ProblemOptions};
use reachplan_core::{
    build_sfo, build_sjo, forward_occupancy, DiffSphere, IdKind, IndeterminateId, KinematicChain, ObstacleSolid,
    PolyZonotope, PzValue, PzfkOptions, SdfCase, TimePartition, TrajectoryFamily, TrajectoryPzBundle, Vector3,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn chain(name: &str) -> KinematicChain {
    fixture_chain(name).unwrap().build().unwrap()
}

fn random_k(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

fn random_family(rng: &mut ChaCha8Rng, chain: &KinematicChain, a_max: f64) -> TrajectoryFamily {
    let q0 = chain
        .joints()
        .iter()
        .map(|j| rng.random_range(j.q_limits.0.max(-PI)..j.q_limits.1.min(PI)))
        .collect();
    let qd0 = chain
        .joints()
        .iter()
        .map(|j| 0.5 * rng.random_range(j.qd_limits.0..j.qd_limits.1))
        .collect();
    TrajectoryFamily::uniform(q0, qd0, 0.5, 1.0, a_max).unwrap()
}

fn sdf_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut hits = [0usize; 3];
    let mut worst = 0.0f64;
    let mut sdf_time = 0.0;
    let (solids, per) = (1000, 40);
    for _ in 0..solids {
        let m = rng.random_range(3..=6);
        let gs = oracle::random_generators(&mut rng, m);
        let c = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let start = Instant::now();
        let solid = ObstacleSolid::new(c, gs.clone()).unwrap();
        sdf_time += start.elapsed().as_secs_f64();
        for s in 0..per {
            let p = oracle::stratified_point(&mut rng, &c, &gs, s);
            let start = Instant::now();
            let r = solid.sdf_detail(&p);
            sdf_time += start.elapsed().as_secs_f64();
            worst = worst.max((r.distance - oracle::signed_distance(&c, &gs, &p)).abs());
            hits[match r.case {
                SdfCase::Interior { .. } => 0,
                SdfCase::Face { .. } => 1,
                SdfCase::Edge { .. } => 2,
            }] += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-9 && hits.iter().all(|&h| h >= 100) && sdf_time < 10.0,
        detail: format!(
            "{solids} zonotopes x {per} points, max |err| {worst:.2e}, interior/face/edge hits {hits:?}, sdf time {sdf_time:.2} s"
        ),
    }
}

fn sdf_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-6;
    let (mut checked, mut worst) = (0usize, 0.0f64);
    while checked < 2000 {
        let m = rng.random_range(3..=6);
        let gs = oracle::random_generators(&mut rng, m);
        let c = Vector3::zeros();
        let solid = ObstacleSolid::new(c, gs.clone()).unwrap();
        let p = oracle::stratified_point(&mut rng, &c, &gs, checked);
        let r = solid.sdf_detail(&p);
        let mut fd = Vector3::zeros();
        let mut smooth = r.distance.abs() > 1e-4;
        for i in 0..3 {
            let e = Vector3::ith(i, h);
            let (up, dn) = (solid.sdf_detail(&(p + e)), solid.sdf_detail(&(p - e)));
            // Points within h of a switch between branches or rows are kinks.
            for side in [&up, &dn] {
                smooth &= std::mem::discriminant(&side.case) == std::mem::discriminant(&r.case)
                    && (side.gradient - r.gradient).norm() < 1e-3;
            }
            fd[i] = (up.distance - dn.distance) / (2.0 * h);
        }
        if smooth {
            worst = worst.max((fd - r.gradient).norm() / r.gradient.norm());
            checked += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-5,
        detail: format!("{checked} smooth points, max relative error {worst:.2e}"),
    }
}

/// Value of a dependent indeterminate at parameter `k` and time value `x`
/// of piece `time`.
fn assignment(k: &[f64], time: IndeterminateId, x: f64) -> impl Fn(IndeterminateId) -> f64 + '_ {
    move |id| match id.kind {
        IdKind::Param => k[id.index as usize],
        IdKind::Time if id == time => x,
        _ => panic!("unexpected indeterminate {id}"),
    }
}

/// How far `truth` sticks out of the set with its dependent part fixed by
/// `dep`; only the independent box remains free.
fn excess<V: PzValue>(set: &PolyZonotope<V>, dep: impl Fn(IndeterminateId) -> f64, truth: V) -> f64 {
    let r = set.realize(dep, &[]);
    let slack = PolyZonotope::new(set.center(), Vec::new(), set.independent().to_vec()).radius();
    (0..V::entry_count())
        .map(|i| (truth.entry(i) - r.entry(i)).abs() - slack.entry(i))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn containment() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    let mut detail = Vec::new();
    for (name, families) in [("3dof", 20), ("7dof", 4)] {
        let chain = chain(name);
        let n = chain.dof();
        let samples = 100_000 / families;
        for _ in 0..families {
            let a_max = rng.random_range(PI / 24.0..PI / 6.0);
            let family = random_family(&mut rng, &chain, a_max);
            let bundle = TrajectoryPzBundle::new(&family, &TimePartition::new(1.0, 40).unwrap());
            let frames: Vec<_> = (0..bundle.pieces.len())
                .map(|p| {
                    chain
                        .pzfk_with(bundle.piece_positions(p), &PzfkOptions::default())
                        .unwrap()
                })
                .collect();
            for _ in 0..samples {
                let p = rng.random_range(0..bundle.pieces.len());
                let piece = &bundle.pieces[p];
                let x = rng.random_range(-1.0..=1.0);
                let t = piece.time_at(x);
                let k = random_k(&mut rng, n);
                let dep = assignment(&k, piece.time_id, x);
                let mut q = Vec::with_capacity(n);
                let mut e = f64::NEG_INFINITY;
                for j in 0..n {
                    let (qj, vj) = family.joint_state(j, k[j], t);
                    q.push(qj);
                    e = e.max(excess(&bundle.positions[p][j], &dep, qj));
                    e = e.max(excess(&bundle.velocities[p][j], &dep, vj));
                }
                for (frame, truth) in frames[p].iter().zip(chain.sphere_centers(&q).unwrap()) {
                    e = e.max(excess(&frame.position, &dep, truth));
                }
                worst = worst.max(e);
                violations += usize::from(e > 1e-12);
            }
        }
        detail.push(format!("{name} {} samples", samples * families));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: violations == 0 && secs < 60.0,
        detail: format!(
            "{}, {violations} violations, worst excess {worst:.2e}, {secs:.1} s",
            detail.join(", ")
        ),
    }
}

fn sfo_coverage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut uncovered, mut points, mut pairs, mut endpoint_mismatch) = (0usize, 0usize, 0usize, 0usize);
    let n_s = 5;
    for name in ["3dof", "7dof"] {
        let chain = chain(name);
        let n = chain.dof();
        let family = random_family(&mut rng, &chain, PI / 12.0);
        let bundle = TrajectoryPzBundle::new(&family, &TimePartition::new(1.0, 40).unwrap());
        let sjo = build_sjo(&chain, &bundle, &PzfkOptions::default()).unwrap();
        let spheres = chain.sphere_count();
        let ks: Vec<Vec<f64>> = (0..10).map(|_| random_k(&mut rng, n)).collect();
        for k in &ks {
            // Endpoints of every link's chain are the swept joint spheres.
            for s in forward_occupancy(&sjo, spheres, k, n_s).unwrap() {
                let joint = if s.m == 1 {
                    Some(s.link)
                } else if s.m == n_s {
                    Some(s.link + 1)
                } else {
                    None
                };
                if let Some(joint) = joint {
                    let want = sjo[s.piece * spheres + joint].slice_diff(k).unwrap();
                    endpoint_mismatch += usize::from(s.sphere != want);
                }
            }
        }
        for block in sjo.chunks(spheres) {
            for j in 0..spheres - 1 {
                pairs += 1;
                for k in &ks {
                    let (a, b) = (block[j].slice_diff(k).unwrap(), block[j + 1].slice_diff(k).unwrap());
                    let sfo = build_sfo(&a, &b, n_s).unwrap();
                    let capsule = TaperedCapsule::new(a.sphere(), b.sphere()).unwrap();
                    for _ in 0..1000 {
                        // Uniform in a ball of the capsule's sweep.
                        let ball = capsule.ball_at(rng.random_range(0.0..=1.0));
                        let dir = loop {
                            let v = Vector3::new(
                                rng.random_range(-1.0..1.0),
                                rng.random_range(-1.0..1.0),
                                rng.random_range(-1.0..1.0),
                            );
                            if v.norm() <= 1.0 {
                                break v;
                            }
                        };
                        let p = ball.center + dir * ball.radius;
                        points += 1;
                        uncovered += usize::from(!sfo.iter().any(|s| (p - s.center).norm() <= s.radius + 1e-9));
                    }
                }
            }
        }
    }
    let still = |x: f64| DiffSphere {
        center: Vector3::new(x, 0.0, 0.0),
        radius: 1.0,
        center_jacobian: vec![Vector3::zeros()],
        radius_gradient: vec![0.0],
    };
    let example = build_sfo(&still(0.0), &still(6.0), 5).unwrap();
    let closed_form = example[1..4].iter().all(|s| (s.radius - 2f64.sqrt()).abs() < 1e-15);
    Outcome {
        pass: uncovered == 0 && endpoint_mismatch == 0 && closed_form,
        detail: format!(
            "{pairs} (link, piece) pairs x 10^4 points, {uncovered} uncovered of {points}, {endpoint_mismatch} endpoint mismatches, equal-radii radius sqrt(2): {closed_form}"
        ),
    }
}

fn constraint_jacobian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-6;
    let (mut checked, mut rows, mut worst) = (0usize, 0usize, 0.0f64);
    let mut seed = 0;
    while checked < 100 {
        seed += 1;
        let scene = Scene::from_dto(&generate_random_scene("7dof", 1000 + seed, 5, 0.2).unwrap()).unwrap();
        let n = scene.chain.dof();
        let qd0 = scene
            .chain
            .joints()
            .iter()
            .map(|j| 0.3 * rng.random_range(j.qd_limits.0..j.qd_limits.1))
            .collect();
        let family = TrajectoryFamily::uniform(scene.start.clone(), qd0, 0.5, 1.0, PI / 24.0).unwrap();
        let options = ProblemOptions {
            prune_margin: f64::INFINITY,
            ..ProblemOptions::default()
        };
        let problem = PlanningProblem::new(
            &scene.chain,
            &scene.obstacles,
            family,
            &TimePartition::new(1.0, 40).unwrap(),
            Cost::Waypoint(scene.goal.clone()),
            &options,
        )
        .unwrap();
        let mut found = 0;
        for _ in 0..200 {
            if found == 10 {
                break;
            }
            let k: Vec<f64> = random_k(&mut rng, n).iter().map(|v| v * 0.999).collect();
            let block = problem.eval_constraints(&k).unwrap();
            if block.min_value().is_some_and(|v| v < 0.0) {
                continue;
            }
            found += 1;
            let mut fd = vec![vec![0.0; n]; block.values.len()];
            for v in 0..n {
                let (mut kp, mut km) = (k.clone(), k.clone());
                kp[v] += h;
                km[v] -= h;
                let (up, dn) = (
                    problem.eval_constraints(&kp).unwrap().values,
                    problem.eval_constraints(&km).unwrap().values,
                );
                for r in 0..up.len() {
                    fd[r][v] = (up[r] - dn[r]) / (2.0 * h);
                }
            }
            for (r, fd_row) in fd.iter().enumerate() {
                let an = block.jacobian.row(r);
                let err: f64 = fd_row
                    .iter()
                    .zip(an.iter())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(err / an.norm().max(1e-3));
            }
            rows += block.values.len();
            checked += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-5,
        detail: format!("{checked} feasible k over {seed} scenes, {rows} rows, max relative error {worst:.2e}"),
    }
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let config = ExperimentConfig {
        chain: "7dof".to_string(),
        n_obstacles: 10,
        trials: 100,
        seed: 0,
        ..ExperimentConfig::default()
    };
    let stats = run_experiment(&config).unwrap();
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: stats.collisions == 0 && stats.success_rate >= 0.5,
        detail: format!(
            "{} trials: {} successes, {} collisions, {} safe stops, {} failures ({:.0}% success, {:.0} s)",
            stats.trials,
            stats.successes,
            stats.collisions,
            stats.safe_stops,
            stats.failures,
            100.0 * stats.success_rate,
            secs
        ),
    }
}

fn conservativeness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut cases, mut tighter) = (0usize, 0usize);
    let mut ratios = Vec::new();
    while cases < 60 {
        let name = if cases % 2 == 0 { "3dof" } else { "7dof" };
        let chain = chain(name);
        let n = chain.dof();
        let family = random_family(&mut rng, &chain, PI / 24.0);
        let bundle = TrajectoryPzBundle::new(&family, &TimePartition::new(1.0, 40).unwrap());
        let p = rng.random_range(0..bundle.pieces.len());
        let frames = chain
            .pzfk_with(bundle.piece_positions(p), &PzfkOptions::default())
            .unwrap();
        let sjo = build_sjo(&chain, &bundle, &PzfkOptions::default()).unwrap();
        let spheres = chain.sphere_count();
        let k = random_k(&mut rng, n);
        let link = rng.random_range(0..spheres - 1);
        let params: Vec<(IndeterminateId, f64)> = (0..n).map(|j| (IndeterminateId::param(j as u32), k[j])).collect();
        let baseline = &build_pz_link_occupancy(&frames, &link_boxes(&chain))[link];
        let sliced = baseline.slice_many(&params).unwrap();
        let (lo, hi) = (sliced.inf(), sliced.sup());
        let block = &sjo[p * spheres..(p + 1) * spheres];
        let sfo = build_sfo(
            &block[link].slice_diff(&k).unwrap(),
            &block[link + 1].slice_diff(&k).unwrap(),
            5,
        )
        .unwrap();
        // Sample a box holding both sets.
        let (mut blo, mut bhi) = (lo, hi);
        for s in &sfo {
            blo = blo.inf(&(s.center - Vector3::repeat(s.radius)));
            bhi = bhi.sup(&(s.center + Vector3::repeat(s.radius)));
        }
        let (mut in_sfo, mut in_hull) = (0usize, 0usize);
        for _ in 0..20_000 {
            let x = Vector3::from_fn(|i, _| rng.random_range(blo[i]..=bhi[i]));
            in_sfo += usize::from(sfo.iter().any(|s| (x - s.center).norm() <= s.radius));
            in_hull += usize::from((0..3).all(|i| x[i] >= lo[i] && x[i] <= hi[i]));
        }
        cases += 1;
        tighter += usize::from(in_sfo <= in_hull);
        ratios.push(in_sfo as f64 / in_hull as f64);
    }
    ratios.sort_by(f64::total_cmp);
    Outcome {
        pass: tighter * 10 >= cases * 9,
        detail: format!(
            "SFO union no larger than the interval hull in {tighter}/{cases} cases, median volume ratio {:.2}",
            ratios[ratios.len() / 2]
        ),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |dof: &str, jobs: &str, tag: &str| {
        let out = dir.path().join(format!("{dof}-{tag}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_reachplan"))
            .args([
                "bench",
                "--dof",
                dof,
                "--n-obstacles",
                "10",
                "--trials",
                "4",
                "--seed",
                "17",
                "--jobs",
                jobs,
            ])
            .arg("--out")
            .arg(&out)
            .stderr(std::process::Stdio::null())
            .status()
            .unwrap();
        (status.code(), std::fs::read(&out).unwrap_or_default())
    };
    let mut identical = true;
    let mut detail = Vec::new();
    for dof in ["3", "7"] {
        let (code, first) = run(dof, "1", "a");
        let same = [run(dof, "1", "b"), run(dof, "2", "c"), run(dof, "4", "d")]
            .iter()
            .all(|(c, bytes)| *c == code && *bytes == first && !first.is_empty());
        identical &= same;
        detail.push(format!(
            "{dof}-DOF {} bytes identical across 4 runs: {same}",
            first.len()
        ));
    }
    Outcome {
        pass: identical,
        detail: format!("{} (jobs 1, 1, 2, 4)", detail.join(", ")),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("SDF exactness", sdf_exactness),
        ("SDF gradient", sdf_gradient),
        ("trajectory and FK containment", containment),
        ("SFO coverage", sfo_coverage),
        ("constraint jacobian", constraint_jacobian),
        ("end-to-end safety", end_to_end),
        ("conservativeness", conservativeness),
        ("determinism", determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "[{verdict}] {}. {name} ({:.1} s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
        failed += usize::from(!outcome.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
