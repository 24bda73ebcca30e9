//! 3D convex hull by incremental insertion, followed by merging coplanar
//! triangles into polygonal facets so that only true corners remain.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use nalgebra::Vector3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum HullError {
    /// Fewer than four affinely independent points.
    Degenerate,
}

#[derive(Debug, Clone)]
struct Tri {
    v: [usize; 3],
    normal: Vector3<f64>,
    offset: f64,
    alive: bool,
}

impl Tri {
    fn new(points: &[Vector3<f64>], v: [usize; 3]) -> Self {
        let n = (points[v[1]] - points[v[0]]).cross(&(points[v[2]] - points[v[0]]));
        let norm = n.norm();
        let normal = if norm > 0.0 { n / norm } else { n };
        Self {
            v,
            normal,
            offset: normal.dot(&points[v[0]]),
            alive: true,
        }
    }

    fn distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Merged hull: corner vertices, outward unit facet planes, and edges as
/// pairs of indices into `vertices`.
#[derive(Debug, Clone)]
pub(crate) struct Hull {
    pub vertices: Vec<Vector3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub offsets: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
    /// Corner indices of each facet, counter-clockwise seen from outside.
    pub facets: Vec<Vec<usize>>,
}

fn dedup(points: &[Vector3<f64>], tol: f64) -> Vec<Vector3<f64>> {
    let mut sorted: Vec<Vector3<f64>> = points.to_vec();
    sorted.sort_by(|a, b| {
        a[0].total_cmp(&b[0])
            .then(a[1].total_cmp(&b[1]))
            .then(a[2].total_cmp(&b[2]))
    });
    let mut out: Vec<Vector3<f64>> = Vec::with_capacity(sorted.len());
    for p in sorted {
        // Only recent entries can be within tol in x.
        let dup = out
            .iter()
            .rev()
            .take_while(|q| p[0] - q[0] <= tol)
            .any(|q| (p - q).amax() <= tol);
        if !dup {
            out.push(p);
        }
    }
    out
}

fn initial_simplex(points: &[Vector3<f64>], eps: f64) -> Result<[usize; 4], HullError> {
    let i0 = (0..points.len())
        .min_by(|&a, &b| points[a][0].total_cmp(&points[b][0]))
        .ok_or(HullError::Degenerate)?;
    let i1 = (0..points.len())
        .max_by(|&a, &b| {
            (points[a] - points[i0])
                .norm_squared()
                .total_cmp(&(points[b] - points[i0]).norm_squared())
        })
        .ok_or(HullError::Degenerate)?;
    let dir = points[i1] - points[i0];
    if dir.norm() <= eps {
        return Err(HullError::Degenerate);
    }
    let line_dist = |p: &Vector3<f64>| (p - points[i0]).cross(&dir).norm() / dir.norm();
    let i2 = (0..points.len())
        .max_by(|&a, &b| line_dist(&points[a]).total_cmp(&line_dist(&points[b])))
        .ok_or(HullError::Degenerate)?;
    if line_dist(&points[i2]) <= eps {
        return Err(HullError::Degenerate);
    }
    let n = dir.cross(&(points[i2] - points[i0])).normalize();
    let plane_dist = |p: &Vector3<f64>| n.dot(&(p - points[i0])).abs();
    let i3 = (0..points.len())
        .max_by(|&a, &b| plane_dist(&points[a]).total_cmp(&plane_dist(&points[b])))
        .ok_or(HullError::Degenerate)?;
    if plane_dist(&points[i3]) <= eps {
        return Err(HullError::Degenerate);
    }
    Ok([i0, i1, i2, i3])
}

/// Triangulated hull of `points` (already deduplicated).
fn triangulate(points: &[Vector3<f64>], eps: f64) -> Result<Vec<Tri>, HullError> {
    let simplex = initial_simplex(points, eps)?;
    let centroid = simplex.iter().map(|&i| points[i]).sum::<Vector3<f64>>() / 4.0;
    let mut tris: Vec<Tri> = Vec::new();
    for (a, b, c) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
        let mut t = Tri::new(points, [simplex[a], simplex[b], simplex[c]]);
        if t.distance(&centroid) > 0.0 {
            t = Tri::new(points, [simplex[a], simplex[c], simplex[b]]);
        }
        tris.push(t);
    }

    // Insert far points first: interior and coplanar points are then
    // rejected by the visibility test instead of becoming spurious vertices.
    let mut order: Vec<usize> = (0..points.len()).filter(|i| !simplex.contains(i)).collect();
    order.sort_by(|&a, &b| {
        (points[b] - centroid)
            .norm_squared()
            .total_cmp(&(points[a] - centroid).norm_squared())
            .then(a.cmp(&b))
    });

    for p in order {
        let point = points[p];
        let visible: Vec<usize> = tris
            .iter()
            .enumerate()
            .filter(|(_, t)| t.alive && t.distance(&point) > eps)
            .map(|(i, _)| i)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut directed: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &f in &visible {
            let v = tris[f].v;
            for e in 0..3 {
                directed.insert((v[e], v[(e + 1) % 3]));
            }
        }
        let horizon: Vec<(usize, usize)> = directed
            .iter()
            .copied()
            .filter(|&(a, b)| !directed.contains(&(b, a)))
            .collect();
        for &f in &visible {
            tris[f].alive = false;
        }
        for (a, b) in horizon {
            tris.push(Tri::new(points, [a, b, p]));
        }
    }
    Ok(tris.into_iter().filter(|t| t.alive).collect())
}

/// Strict convex hull of coplanar points (by index) around `normal`,
/// counter-clockwise when seen from the side `normal` points to.
fn facet_polygon(points: &[Vector3<f64>], ids: &[usize], normal: &Vector3<f64>, eps: f64) -> Vec<usize> {
    let u = if normal[0].abs() < 0.9 {
        Vector3::x().cross(normal).normalize()
    } else {
        Vector3::y().cross(normal).normalize()
    };
    let w = normal.cross(&u);
    let mut pts: Vec<(f64, f64, usize)> = ids.iter().map(|&i| (points[i].dot(&u), points[i].dot(&w), i)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let cross = |o: &(f64, f64, usize), a: &(f64, f64, usize), b: &(f64, f64, usize)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let extent = pts
        .iter()
        .map(|p| (p.0 - pts[0].0).abs().max((p.1 - pts[0].1).abs()))
        .fold(0.0, f64::max);
    let area_tol = eps * extent.max(1.0);
    // Andrew's monotone chain, dropping collinear points.
    let mut lower: Vec<(f64, f64, usize)> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= area_tol {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<(f64, f64, usize)> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= area_tol {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower.into_iter().map(|p| p.2).collect()
}

pub(crate) fn convex_hull(points: &[Vector3<f64>], eps: f64) -> Result<Hull, HullError> {
    let points = dedup(points, eps);
    if points.len() < 4 {
        return Err(HullError::Degenerate);
    }
    let tris = triangulate(&points, eps)?;

    // Group triangles by supporting plane.
    let mut groups: Vec<(Vector3<f64>, f64, BTreeSet<usize>)> = Vec::new();
    for t in &tris {
        match groups
            .iter_mut()
            .find(|(n, d, _)| (n - t.normal).amax() < 1e-7 && (d - t.offset).abs() < 1e-7 * (1.0 + d.abs()))
        {
            Some(g) => g.2.extend(t.v),
            None => groups.push((t.normal, t.offset, t.v.iter().copied().collect())),
        }
    }

    let mut corner_index: BTreeMap<usize, usize> = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut offsets = Vec::new();
    let mut facets = Vec::new();
    let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (normal, _, ids) in &groups {
        let ids: Vec<usize> = ids.iter().copied().collect();
        // Refit the plane through the facet's points.
        let centroid = ids.iter().map(|&i| points[i]).sum::<Vector3<f64>>() / ids.len() as f64;
        let poly = facet_polygon(&points, &ids, normal, eps);
        if poly.len() < 3 {
            return Err(HullError::Degenerate);
        }
        let mut local = Vec::with_capacity(poly.len());
        for &p in &poly {
            let next = corner_index.len();
            let idx = *corner_index.entry(p).or_insert(next);
            if idx == vertices.len() {
                vertices.push(points[p]);
            }
            local.push(idx);
        }
        for e in 0..local.len() {
            let (a, b) = (local[e], local[(e + 1) % local.len()]);
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
        normals.push(*normal);
        offsets.push(normal.dot(&centroid));
        facets.push(local);
    }
    if edge_count.values().any(|&c| c != 2) {
        return Err(HullError::Degenerate);
    }
    Ok(Hull {
        vertices,
        normals,
        offsets,
        edges: edge_count.into_keys().collect(),
        facets,
    })
}
