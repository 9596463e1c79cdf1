//! Synthetic planar scenes with ground-truth edges.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    /// Unit cube, six faces.
    Cube,
    /// 4 x 3 x 2.5 box with floor, ceiling and four walls.
    Room,
    /// 30 x 15 wall with a 10 x 5 grid of window holes and recessed panes.
    Facade,
    /// A 2 x 2 floor meeting a 2 x 2 wall.
    TwoPlanes,
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(SceneKind::Cube),
            "room" => Ok(SceneKind::Room),
            "facade" => Ok(SceneKind::Facade),
            "two-planes" => Ok(SceneKind::TwoPlanes),
            other => Err(Error::InvalidParameter(format!("unknown scene `{other}`"))),
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SceneKind::Cube => "cube",
            SceneKind::Room => "room",
            SceneKind::Facade => "facade",
            SceneKind::TwoPlanes => "two-planes",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl Edge {
    fn new(a: Vec3, b: Vec3) -> Self {
        Edge { a: a.into(), b: b.into() }
    }

    pub fn length(&self) -> f64 {
        (Vec3::from(self.b) - Vec3::from(self.a)).norm()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub cloud: PointCloud,
    pub truth: GroundTruth,
    /// Index range of each sampled face within the cloud.
    pub faces: Vec<std::ops::Range<usize>>,
}

const FACADE_W: f64 = 30.0;
const FACADE_H: f64 = 15.0;
const WINDOW_COLS: usize = 10;
const WINDOW_ROWS: usize = 5;
const WINDOW_W: f64 = 1.4;
const WINDOW_H: f64 = 1.8;
const PANE_DEPTH: f64 = 0.3;

/// Spacing that gives roughly `points` samples on the facade scene.
pub fn facade_spacing_for(points: usize) -> f64 {
    (FACADE_W * FACADE_H / points.max(1) as f64).sqrt()
}

/// Rectangle `origin + s*u + t*v`, `s, t` in [0, 1].
struct Face {
    origin: Vec3,
    u: Vec3,
    v: Vec3,
    /// Open rectangles in (s, t) excluded from sampling.
    holes: Vec<[f64; 4]>,
}

impl Face {
    fn new(origin: Vec3, u: Vec3, v: Vec3) -> Self {
        Face { origin, u, v, holes: Vec::new() }
    }

    fn corners(&self) -> [Vec3; 4] {
        let o = self.origin;
        [o, o + self.u, o + self.u + self.v, o + self.v]
    }

    fn sample(&self, spacing: f64, noise: Option<&Normal<f64>>, rng: &mut ChaCha8Rng, out: &mut Vec<Vec3>) {
        let nu = ((self.u.norm() / spacing).round() as usize).max(1);
        let nv = ((self.v.norm() / spacing).round() as usize).max(1);
        let normal = self.u.cross(&self.v).normalize();
        for j in 0..=nv {
            let t = j as f64 / nv as f64;
            for i in 0..=nu {
                let s = i as f64 / nu as f64;
                if self.holes.iter().any(|h| s > h[0] && s < h[2] && t > h[1] && t < h[3]) {
                    continue;
                }
                let mut p = self.origin + self.u * s + self.v * t;
                if let Some(n) = noise {
                    p += normal * n.sample(rng);
                }
                out.push(p);
            }
        }
    }
}

fn box_faces(min: Vec3, size: Vec3) -> Vec<Face> {
    let (x, y, z) = (Vec3::x() * size.x, Vec3::y() * size.y, Vec3::z() * size.z);
    vec![
        Face::new(min, y, x),
        Face::new(min + z, x, y),
        Face::new(min, x, z),
        Face::new(min + y, z, x),
        Face::new(min, z, y),
        Face::new(min + x, y, z),
    ]
}

fn box_edges(min: Vec3, size: Vec3) -> Vec<Edge> {
    let corner = |i: usize| {
        min + Vec3::new(
            if i & 1 != 0 { size.x } else { 0.0 },
            if i & 2 != 0 { size.y } else { 0.0 },
            if i & 4 != 0 { size.z } else { 0.0 },
        )
    };
    let mut edges = Vec::new();
    for i in 0..8usize {
        for bit in [1usize, 2, 4] {
            if i & bit == 0 {
                edges.push(Edge::new(corner(i), corner(i | bit)));
            }
        }
    }
    edges
}

fn rectangle_edges(corners: [Vec3; 4]) -> Vec<Edge> {
    (0..4).map(|i| Edge::new(corners[i], corners[(i + 1) % 4])).collect()
}

fn facade() -> (Vec<Face>, Vec<Edge>) {
    let mut wall = Face::new(Vec3::zeros(), Vec3::x() * FACADE_W, Vec3::z() * FACADE_H);
    let mut edges = rectangle_edges(wall.corners());
    let mut panes = Vec::new();
    let (cell_w, cell_h) = (FACADE_W / WINDOW_COLS as f64, FACADE_H / WINDOW_ROWS as f64);
    for r in 0..WINDOW_ROWS {
        for c in 0..WINDOW_COLS {
            let x0 = c as f64 * cell_w + (cell_w - WINDOW_W) / 2.0;
            let z0 = r as f64 * cell_h + (cell_h - WINDOW_H) / 2.0;
            wall.holes.push([
                x0 / FACADE_W,
                z0 / FACADE_H,
                (x0 + WINDOW_W) / FACADE_W,
                (z0 + WINDOW_H) / FACADE_H,
            ]);
            let hole = Face::new(Vec3::new(x0, 0.0, z0), Vec3::x() * WINDOW_W, Vec3::z() * WINDOW_H);
            edges.extend(rectangle_edges(hole.corners()));
            let pane = Face::new(
                Vec3::new(x0, PANE_DEPTH, z0),
                Vec3::x() * WINDOW_W,
                Vec3::z() * WINDOW_H,
            );
            edges.extend(rectangle_edges(pane.corners()));
            panes.push(pane);
        }
    }
    let mut faces = vec![wall];
    faces.extend(panes);
    (faces, edges)
}

/// Samples the named scene on a regular grid per face with Gaussian noise of
/// standard deviation `noise` along each face normal.
pub fn generate_scene(kind: SceneKind, spacing: f64, noise: f64, seed: u64) -> Result<Scene> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidParameter(format!("spacing must be positive, got {spacing}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise must be non-negative, got {noise}")));
    }
    let (faces, edges) = match kind {
        SceneKind::Cube => (
            box_faces(Vec3::zeros(), Vec3::repeat(1.0)),
            box_edges(Vec3::zeros(), Vec3::repeat(1.0)),
        ),
        SceneKind::Room => {
            let (min, size) = (Vec3::new(1.0, 1.0, 0.0), Vec3::new(4.0, 3.0, 2.5));
            (box_faces(min, size), box_edges(min, size))
        }
        SceneKind::TwoPlanes => {
            let floor = Face::new(Vec3::zeros(), Vec3::y() * 2.0, Vec3::x() * 2.0);
            let wall = Face::new(Vec3::zeros(), Vec3::z() * 2.0, Vec3::y() * 2.0);
            let mut edges = rectangle_edges(floor.corners());
            edges.extend(rectangle_edges(wall.corners()).into_iter().take(3));
            (vec![floor, wall], edges)
        }
        SceneKind::Facade => facade(),
    };
    let dist = (noise > 0.0).then(|| Normal::new(0.0, noise).expect("finite sigma"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    let mut ranges = Vec::with_capacity(faces.len());
    for face in &faces {
        let start = points.len();
        face.sample(spacing, dist.as_ref(), &mut rng, &mut points);
        ranges.push(start..points.len());
    }
    Ok(Scene {
        cloud: PointCloud::new(points),
        truth: GroundTruth { edges },
        faces: ranges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_counts() {
        let s = generate_scene(SceneKind::Cube, 0.01, 0.0, 1).unwrap();
        assert_eq!(s.cloud.len(), 6 * 101 * 101);
        assert_eq!(s.truth.edges.len(), 12);
        assert!(s.truth.edges.iter().all(|e| (e.length() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn noiseless_points_lie_on_their_faces() {
        for kind in [SceneKind::Cube, SceneKind::Room, SceneKind::TwoPlanes] {
            let s = generate_scene(kind, 0.05, 0.0, 3).unwrap();
            for range in &s.faces {
                let pts = &s.cloud.points[range.clone()];
                let n = (pts[1] - pts[0]).cross(&(pts[pts.len() - 1] - pts[0])).normalize();
                for p in pts {
                    assert!((p - pts[0]).dot(&n).abs() < 1e-12, "{kind}");
                }
            }
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = generate_scene(SceneKind::Cube, 0.05, 0.002, 9).unwrap();
        let b = generate_scene(SceneKind::Cube, 0.05, 0.002, 9).unwrap();
        let c = generate_scene(SceneKind::Cube, 0.05, 0.002, 10).unwrap();
        assert_eq!(a.cloud, b.cloud);
        assert_ne!(a.cloud, c.cloud);
    }

    #[test]
    fn noise_is_perpendicular_with_requested_sigma() {
        let s = generate_scene(SceneKind::TwoPlanes, 0.01, 0.003, 4).unwrap();
        let floor = &s.cloud.points[s.faces[0].clone()];
        let var = floor.iter().map(|p| p.z * p.z).sum::<f64>() / floor.len() as f64;
        assert!((var.sqrt() - 0.003).abs() < 1e-4, "{}", var.sqrt());
        assert_eq!(s.truth.edges.len(), 7);
    }

    #[test]
    fn facade_has_holes_and_requested_size() {
        let h = facade_spacing_for(50_000);
        let s = generate_scene(SceneKind::Facade, h, 0.0, 1).unwrap();
        let n = s.cloud.len() as f64;
        assert!((n / 50_000.0 - 1.0).abs() < 0.1, "{n}");
        assert_eq!(s.truth.edges.len(), 4 + 8 * WINDOW_ROWS * WINDOW_COLS);
        assert_eq!(s.faces.len(), 1 + WINDOW_ROWS * WINDOW_COLS);
        // Window centre of the first hole holds no wall point.
        let (cx, cz) = (1.5, 1.5);
        assert!(!s.cloud.points[s.faces[0].clone()]
            .iter()
            .any(|p| (p.x - cx).abs() < 0.5 && (p.z - cz).abs() < 0.5));
    }

    #[test]
    fn edges_are_distinct() {
        for kind in [SceneKind::Cube, SceneKind::Room, SceneKind::TwoPlanes, SceneKind::Facade] {
            let s = generate_scene(kind, 0.5, 0.0, 1).unwrap();
            let mut keys: Vec<_> = s
                .truth
                .edges
                .iter()
                .map(|e| {
                    let (a, b) = (e.a.map(|v| (v * 1e6).round() as i64), e.b.map(|v| (v * 1e6).round() as i64));
                    if a < b { (a, b) } else { (b, a) }
                })
                .collect();
            let n = keys.len();
            keys.sort();
            keys.dedup();
            assert_eq!(keys.len(), n, "{kind}");
        }
    }

    #[test]
    fn parses_names() {
        for k in [SceneKind::Cube, SceneKind::Room, SceneKind::Facade, SceneKind::TwoPlanes] {
            assert_eq!(k.to_string().parse::<SceneKind>().unwrap(), k);
        }
        assert!("sphere".parse::<SceneKind>().is_err());
    }
}
