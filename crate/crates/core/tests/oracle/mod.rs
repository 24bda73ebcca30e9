//! Reference distances that share no code with the hull-based implementation.
#![allow(dead_code)]

use nalgebra::{Matrix2, Vector2, Vector3};
use rand::Rng;

/// Generators in general position: no two within ~10° of parallel and no
/// three coplanar within a tolerance, so every 2D face comes from exactly
/// one generator pair.
pub fn random_generators<R: Rng>(rng: &mut R, m: usize) -> Vec<Vector3<f64>> {
    'retry: loop {
        let mut gs: Vec<Vector3<f64>> = Vec::with_capacity(m);
        for _ in 0..m {
            let dir = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if dir.norm() < 0.2 {
                continue 'retry;
            }
            gs.push(dir.normalize() * rng.random_range(0.03..0.15));
        }
        for i in 0..m {
            for j in i + 1..m {
                let (a, b) = (gs[i].normalize(), gs[j].normalize());
                if a.cross(&b).norm() < 0.17 {
                    continue 'retry;
                }
                for g in gs.iter().skip(j + 1) {
                    if a.cross(&b).normalize().dot(&g.normalize()).abs() < 0.05 {
                        continue 'retry;
                    }
                }
            }
        }
        return gs;
    }
}

/// Exterior distance as `min ‖c + Gσ - p‖` over the unit box, by
/// enumerating active sets: at most two free coefficients solved in least
/// squares, the rest pinned at ±1, feasible candidates only.
pub fn exterior_distance(c: &Vector3<f64>, gs: &[Vector3<f64>], p: &Vector3<f64>) -> f64 {
    let m = gs.len();
    let mut best = f64::INFINITY;
    let subsets: Vec<Vec<usize>> = core::iter::once(vec![])
        .chain((0..m).map(|i| vec![i]))
        .chain((0..m).flat_map(|i| (i + 1..m).map(move |j| vec![i, j])))
        .collect();
    for free in &subsets {
        let fixed: Vec<usize> = (0..m).filter(|i| !free.contains(i)).collect();
        for mask in 0u32..(1 << fixed.len()) {
            let mut base = *c;
            for (b, &i) in fixed.iter().enumerate() {
                base += if mask & (1 << b) != 0 { gs[i] } else { -gs[i] };
            }
            let r = p - base;
            let point = match free[..] {
                [] => base,
                [i] => {
                    let s = gs[i].dot(&r) / gs[i].norm_squared();
                    if s.abs() > 1.0 {
                        continue;
                    }
                    base + gs[i] * s
                }
                [i, j] => {
                    let a = Matrix2::new(
                        gs[i].norm_squared(),
                        gs[i].dot(&gs[j]),
                        gs[i].dot(&gs[j]),
                        gs[j].norm_squared(),
                    );
                    let s = a.try_inverse().expect("independent pair") * Vector2::new(gs[i].dot(&r), gs[j].dot(&r));
                    if s.amax() > 1.0 {
                        continue;
                    }
                    base + gs[i] * s.x + gs[j] * s.y
                }
                _ => unreachable!(),
            };
            best = best.min((p - point).norm());
        }
    }
    best
}

/// Facet planes from generator-pair cross products.
pub fn facet_planes(c: &Vector3<f64>, gs: &[Vector3<f64>]) -> Vec<(Vector3<f64>, f64)> {
    let mut planes = Vec::new();
    for i in 0..gs.len() {
        for j in i + 1..gs.len() {
            let n = gs[i].cross(&gs[j]).normalize();
            let h: f64 = gs.iter().map(|g| n.dot(g).abs()).sum();
            planes.push((n, n.dot(c) + h));
            planes.push((-n, -n.dot(c) + h));
        }
    }
    planes
}

/// Signed distance: the exterior distance outside, minus the distance to
/// the nearest facet plane inside.
pub fn signed_distance(c: &Vector3<f64>, gs: &[Vector3<f64>], p: &Vector3<f64>) -> f64 {
    let depth = facet_planes(c, gs)
        .iter()
        .map(|(n, b)| n.dot(p) - b)
        .fold(f64::NEG_INFINITY, f64::max);
    if depth <= 0.0 {
        depth
    } else {
        exterior_distance(c, gs, p)
    }
}

fn random_unit<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Extreme point of the zonotope in direction `n`, with generator `free`
/// (if any) set to `sigma` instead of its sign.
fn support<R: Rng>(
    c: &Vector3<f64>,
    gs: &[Vector3<f64>],
    n: &Vector3<f64>,
    free: Option<usize>,
    rng: &mut R,
) -> Vector3<f64> {
    c + gs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            if Some(i) == free {
                g * rng.random_range(-1.0..1.0)
            } else {
                g * n.dot(g).signum()
            }
        })
        .sum::<Vector3<f64>>()
}

/// A point drawn from stratum `stratum % 4`: inside, near a face, near an
/// edge, near a vertex.
pub fn stratified_point<R: Rng>(rng: &mut R, c: &Vector3<f64>, gs: &[Vector3<f64>], stratum: usize) -> Vector3<f64> {
    let offset = |rng: &mut R| rng.random_range(0.0..0.15);
    match stratum % 4 {
        0 => c + gs.iter().map(|g| g * rng.random_range(-1.0..1.0)).sum::<Vector3<f64>>(),
        1 => {
            let planes = facet_planes(c, gs);
            let (n, _) = planes[rng.random_range(0..planes.len())];
            // Facet spanned by the pair that produced n, both coefficients free.
            let on_face = c + gs
                .iter()
                .map(|g| {
                    let d = n.dot(g);
                    if d.abs() < 1e-12 {
                        g * rng.random_range(-1.0..1.0)
                    } else {
                        g * d.signum()
                    }
                })
                .sum::<Vector3<f64>>();
            on_face + n * offset(rng)
        }
        2 => {
            let i = rng.random_range(0..gs.len());
            let g = gs[i].normalize();
            let n = {
                let v = random_unit(rng);
                (v - g * g.dot(&v)).normalize()
            };
            support(c, gs, &n, Some(i), rng) + n * offset(rng)
        }
        _ => {
            let n = random_unit(rng);
            support(c, gs, &n, None, rng) + n * offset(rng)
        }
    }
}
