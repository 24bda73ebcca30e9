//! Obstacle zonotopes in 3D and the exact point-to-zonotope signed distance.

mod hull;

use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Upper bound on generators per obstacle; vertex enumeration visits every
/// sign combination.
pub const MAX_GENERATORS: usize = 16;

/// Tolerance for deduplication and on-boundary tests, meters.
pub const GEOMETRY_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("generators span fewer than 3 dimensions")]
    RankDeficient,
    #[error("{0} generators exceeds the limit of {MAX_GENERATORS}")]
    TooManyGenerators(usize),
    #[error("degenerate hull")]
    DegenerateHull,
    #[error("non-finite obstacle data")]
    NonFinite,
}

/// A full-dimensional zonotope `{c + Σ σ_i g_i : σ ∈ [-1, 1]^m}` with its
/// vertex, facet and edge representation cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSolid {
    center: Vector3<f64>,
    generators: Vec<Vector3<f64>>,
    vertices: Vec<Vector3<f64>>,
    edges: Vec<(usize, usize)>,
    normals: Vec<Vector3<f64>>,
    offsets: Vec<f64>,
    facets: Vec<Vec<usize>>,
}

/// Which branch of the distance computation produced the value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SdfCase {
    /// Inside (or on the boundary); value is the largest facet row.
    Interior { row: usize },
    /// Outside, nearest point inside facet `row`.
    Face { row: usize },
    /// Outside, nearest point on edge `edge` (vertices included).
    Edge { edge: usize, nearest: Vector3<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfResult {
    pub distance: f64,
    pub gradient: Vector3<f64>,
    pub case: SdfCase,
}

impl ObstacleSolid {
    pub fn new(center: Vector3<f64>, generators: Vec<Vector3<f64>>) -> Result<Self, GeometryError> {
        if !center
            .iter()
            .chain(generators.iter().flat_map(|g| g.iter()))
            .all(|v| v.is_finite())
        {
            return Err(GeometryError::NonFinite);
        }
        let generators: Vec<_> = generators.into_iter().filter(|g| g.norm() > GEOMETRY_EPS).collect();
        if generators.len() > MAX_GENERATORS {
            return Err(GeometryError::TooManyGenerators(generators.len()));
        }
        if !full_rank(&generators) {
            return Err(GeometryError::RankDeficient);
        }
        let hull = hull::convex_hull(&sign_points(&center, &generators), GEOMETRY_EPS)
            .map_err(|_| GeometryError::DegenerateHull)?;
        Ok(Self {
            center,
            generators,
            vertices: hull.vertices,
            edges: hull.edges,
            normals: hull.normals,
            offsets: hull.offsets,
            facets: hull.facets,
        })
    }

    /// Axis-aligned box with the given half widths.
    pub fn axis_aligned_box(center: Vector3<f64>, half_widths: Vector3<f64>) -> Result<Self, GeometryError> {
        let generators = (0..3)
            .map(|i| {
                let mut g = Vector3::zeros();
                g[i] = half_widths[i];
                g
            })
            .collect();
        Self::new(center, generators)
    }

    pub fn center(&self) -> &Vector3<f64> {
        &self.center
    }

    pub fn generators(&self) -> &[Vector3<f64>] {
        &self.generators
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Unit outward facet normals (rows of `A`).
    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    /// Facet offsets `b`.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Corner indices of each facet, counter-clockwise seen from outside.
    pub fn facets(&self) -> &[Vec<usize>] {
        &self.facets
    }

    /// Radius of the smallest center-anchored ball containing the obstacle.
    pub fn bounding_radius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| (v - self.center).norm())
            .fold(0.0, f64::max)
    }

    /// `Ac - b`.
    pub fn plane_distances(&self, c: &Vector3<f64>) -> impl Iterator<Item = f64> + '_ {
        let c = *c;
        self.normals.iter().zip(&self.offsets).map(move |(n, b)| n.dot(&c) - b)
    }

    pub fn contains(&self, c: &Vector3<f64>) -> bool {
        self.plane_distances(c).all(|d| d <= 0.0)
    }

    /// Signed distance from `c`: negative inside, positive outside.
    pub fn sdf(&self, c: &Vector3<f64>) -> f64 {
        self.sdf_detail(c).distance
    }

    pub fn sdf_gradient(&self, c: &Vector3<f64>) -> Vector3<f64> {
        self.sdf_detail(c).gradient
    }

    pub fn sdf_detail(&self, c: &Vector3<f64>) -> SdfResult {
        let mut d_face = f64::NEG_INFINITY;
        let mut row_max = 0;
        for (i, d) in self.plane_distances(c).enumerate() {
            if d > d_face {
                d_face = d;
                row_max = i;
            }
        }
        if d_face <= 0.0 {
            return SdfResult {
                distance: d_face,
                gradient: self.normals[row_max],
                case: SdfCase::Interior { row: row_max },
            };
        }
        for (row, d) in self.plane_distances(c).enumerate() {
            if d < 0.0 {
                continue;
            }
            let p = c - self.normals[row] * d;
            if self.plane_distances(&p).all(|v| v <= GEOMETRY_EPS) {
                return SdfResult {
                    distance: d,
                    gradient: self.normals[row],
                    case: SdfCase::Face { row },
                };
            }
        }
        let mut best = f64::INFINITY;
        let mut best_edge = 0;
        let mut nearest = *c;
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            let p = closest_on_segment(c, &self.vertices[a], &self.vertices[b]);
            let dist = (c - p).norm();
            if dist < best {
                best = dist;
                best_edge = e;
                nearest = p;
            }
        }
        let gradient = if best > 0.0 {
            (c - nearest) / best
        } else {
            self.normals[row_max]
        };
        SdfResult {
            distance: best,
            gradient,
            case: SdfCase::Edge {
                edge: best_edge,
                nearest,
            },
        }
    }

    /// Distances for many points, in input order.
    pub fn sdf_batch(&self, points: &[Vector3<f64>]) -> Vec<f64> {
        points.iter().map(|p| self.sdf(p)).collect()
    }
}

fn full_rank(generators: &[Vector3<f64>]) -> bool {
    let gram: Matrix3<f64> = generators.iter().map(|g| g * g.transpose()).sum();
    let eig = gram.symmetric_eigenvalues();
    let max = eig.amax();
    max > 0.0 && eig.min() > 1e-18 * max
}

/// Extreme points of the zonotope: hull corners of all `2^m` sign
/// combinations, deduplicated at [`GEOMETRY_EPS`].
pub fn enumerate_vertices(
    center: &Vector3<f64>,
    generators: &[Vector3<f64>],
) -> Result<Vec<Vector3<f64>>, GeometryError> {
    if generators.len() > MAX_GENERATORS {
        return Err(GeometryError::TooManyGenerators(generators.len()));
    }
    if !full_rank(generators) {
        return Err(GeometryError::RankDeficient);
    }
    let hull =
        hull::convex_hull(&sign_points(center, generators), GEOMETRY_EPS).map_err(|_| GeometryError::DegenerateHull)?;
    Ok(hull.vertices)
}

fn sign_points(center: &Vector3<f64>, generators: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let m = generators.len();
    (0u32..(1u32 << m))
        .map(|mask| {
            let mut p = *center;
            for (i, g) in generators.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    p += g;
                } else {
                    p -= g;
                }
            }
            p
        })
        .collect()
}

fn closest_on_segment(c: &Vector3<f64>, v0: &Vector3<f64>, v1: &Vector3<f64>) -> Vector3<f64> {
    let d = v1 - v0;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return *v0;
    }
    let t = ((c - v0).dot(&d) / len2).clamp(0.0, 1.0);
    v0 + d * t
}

/// Distance from `c` to the closed segment `[v0, v1]`.
pub fn point_segment_distance(c: &Vector3<f64>, v0: &Vector3<f64>, v1: &Vector3<f64>) -> f64 {
    (c - closest_on_segment(c, v0, v1)).norm()
}
