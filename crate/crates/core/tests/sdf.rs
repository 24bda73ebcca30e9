mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reachplan_core::{ObstacleSolid, SdfCase, Vector3};

fn random_solid(rng: &mut ChaCha8Rng) -> (Vector3<f64>, Vec<Vector3<f64>>, ObstacleSolid) {
    let m = rng.random_range(3..=6);
    let gs = oracle::random_generators(rng, m);
    let c = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let solid = ObstacleSolid::new(c, gs.clone()).unwrap();
    (c, gs, solid)
}

#[test]
fn matches_box_constrained_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut hits = [0usize; 3];
    for _ in 0..200 {
        let (c, gs, solid) = random_solid(&mut rng);
        for s in 0..12 {
            let p = oracle::stratified_point(&mut rng, &c, &gs, s);
            let r = solid.sdf_detail(&p);
            let want = oracle::signed_distance(&c, &gs, &p);
            assert!((r.distance - want).abs() <= 1e-9, "{} vs {want} at {p:?}", r.distance);
            hits[match r.case {
                SdfCase::Interior { .. } => 0,
                SdfCase::Face { .. } => 1,
                SdfCase::Edge { .. } => 2,
            }] += 1;
        }
    }
    assert!(hits.iter().all(|&h| h >= 100), "{hits:?}");
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = 1e-6;
    let mut checked = 0;
    while checked < 1000 {
        let (c, gs, solid) = random_solid(&mut rng);
        let p = oracle::stratified_point(&mut rng, &c, &gs, checked);
        let r = solid.sdf_detail(&p);
        let mut fd = Vector3::zeros();
        let mut smooth = true;
        for i in 0..3 {
            let e = Vector3::ith(i, h);
            let (up, dn) = (solid.sdf_detail(&(p + e)), solid.sdf_detail(&(p - e)));
            // Skip points within h of a switch between branches or rows.
            smooth &= core::mem::discriminant(&up.case) == core::mem::discriminant(&r.case)
                && core::mem::discriminant(&dn.case) == core::mem::discriminant(&r.case)
                && (up.gradient - r.gradient).norm() < 1e-3
                && (dn.gradient - r.gradient).norm() < 1e-3;
            fd[i] = (up.distance - dn.distance) / (2.0 * h);
        }
        if !smooth || r.distance.abs() < 1e-4 {
            continue;
        }
        assert!(
            (fd - r.gradient).norm() <= 1e-5 * r.gradient.norm(),
            "{fd:?} vs {:?}",
            r.gradient
        );
        assert!((r.gradient.norm() - 1.0).abs() < 1e-12);
        checked += 1;
    }
}

#[test]
fn one_lipschitz_and_sign_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let (c, gs, solid) = random_solid(&mut rng);
        for s in 0..20 {
            let a = oracle::stratified_point(&mut rng, &c, &gs, s);
            let b = oracle::stratified_point(&mut rng, &c, &gs, s + 1);
            let (da, db) = (solid.sdf(&a), solid.sdf(&b));
            assert!((da - db).abs() <= (a - b).norm() + 1e-12);
            assert_eq!(da <= 0.0, solid.contains(&a));
        }
    }
}
