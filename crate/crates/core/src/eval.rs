//! Scoring detected segments against ground-truth edges.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::line2d::LineSegment3D;
use crate::scene::Edge;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    /// Distance tolerance between segment endpoints and the edge line.
    pub tol: f64,
    pub max_angle_deg: f64,
    /// Fraction of an edge that matching segments must cover.
    pub min_coverage: f64,
}

impl EvalParams {
    pub fn with_tol(tol: f64) -> Self {
        EvalParams {
            tol,
            max_angle_deg: 5.0,
            min_coverage: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub coverage: f64,
    pub recovered: bool,
    /// Indices of the segments matching this edge.
    pub matches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub edges_total: usize,
    pub edges_recovered: usize,
    pub recall: f64,
    /// Mean over the endpoints of recovered edges of the distance to the
    /// closest endpoint of a matching segment. `None` if nothing was recovered.
    pub mean_endpoint_error: Option<f64>,
    pub spurious_length: f64,
    pub spurious_ratio: f64,
    pub edges: Vec<EdgeReport>,
}

/// Whether `seg` lies along `edge`: angle below the limit and both endpoints
/// within `tol` of the edge's line.
fn matches(seg: &LineSegment3D, a: &Vec3, dir: &Vec3, params: &EvalParams) -> bool {
    let len = seg.length();
    if len == 0.0 {
        return false;
    }
    let cos = (seg.direction().dot(dir)).abs().min(1.0);
    if cos.acos().to_degrees() >= params.max_angle_deg {
        return false;
    }
    [seg.a, seg.b].iter().all(|p| {
        let d = p - a;
        (d - dir * d.dot(dir)).norm() < params.tol
    })
}

fn union_length(mut intervals: Vec<(f64, f64)>) -> f64 {
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (lo, hi) in intervals {
        match current {
            Some((clo, chi)) if lo <= chi => current = Some((clo, chi.max(hi))),
            Some((clo, chi)) => {
                total += chi - clo;
                current = Some((lo, hi));
            }
            None => current = Some((lo, hi)),
        }
    }
    total + current.map_or(0.0, |(lo, hi)| hi - lo)
}

pub fn evaluate(segments: &[LineSegment3D], truth: &[Edge], params: &EvalParams) -> EvalReport {
    let mut matched_any = vec![false; segments.len()];
    let mut edges = Vec::with_capacity(truth.len());
    let mut endpoint_errors = Vec::new();
    for edge in truth {
        let (a, b) = (Vec3::from(edge.a), Vec3::from(edge.b));
        let len = (b - a).norm();
        let dir = (b - a) / len;
        let hits: Vec<usize> = (0..segments.len())
            .filter(|&i| matches(&segments[i], &a, &dir, params))
            .collect();
        let intervals = hits
            .iter()
            .map(|&i| {
                let s = &segments[i];
                let (ta, tb) = ((s.a - a).dot(&dir), (s.b - a).dot(&dir));
                (ta.min(tb).clamp(0.0, len), ta.max(tb).clamp(0.0, len))
            })
            .collect();
        let coverage = union_length(intervals) / len;
        let recovered = !hits.is_empty() && coverage >= params.min_coverage;
        for &i in &hits {
            matched_any[i] = true;
        }
        if recovered {
            for gt in [a, b] {
                let best = hits
                    .iter()
                    .flat_map(|&i| [segments[i].a, segments[i].b])
                    .map(|p| (p - gt).norm())
                    .fold(f64::INFINITY, f64::min);
                endpoint_errors.push(best);
            }
        }
        edges.push(EdgeReport {
            coverage,
            recovered,
            matches: hits,
        });
    }
    let edges_recovered = edges.iter().filter(|e| e.recovered).count();
    let total_truth: f64 = truth.iter().map(Edge::length).sum();
    let spurious_length: f64 = segments
        .iter()
        .zip(&matched_any)
        .filter(|(_, &m)| !m)
        .map(|(s, _)| s.length())
        .fold(0.0, |acc, l| acc + l);
    EvalReport {
        edges_total: truth.len(),
        edges_recovered,
        recall: if truth.is_empty() { 0.0 } else { edges_recovered as f64 / truth.len() as f64 },
        mean_endpoint_error: (!endpoint_errors.is_empty())
            .then(|| endpoint_errors.iter().sum::<f64>() / endpoint_errors.len() as f64),
        spurious_length,
        spurious_ratio: if total_truth > 0.0 { spurious_length / total_truth } else { 0.0 },
        edges,
    }
}
