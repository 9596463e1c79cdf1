//! Structure-aware cleanup of the raw 3D segments: outlier planes by
//! orientation clustering, outlier segments by per-contour length tiers,
//! then merging of near-collinear segments.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{le, lt, sort_with_ties, undirected_angle_deg, PointCloud, Vec3, REL_EPS};
use crate::line2d::LineSegment3D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostParams {
    pub cluster_join_deg: f64,
    pub cluster_new_deg: f64,
    pub plane_reject_ratio: f64,
    pub latitude_bin_deg: f64,
    pub merge_dist_ratio: f64,
    pub merge_perp_mult: f64,
    pub merge_gap_mult: f64,
}

impl Default for PostParams {
    fn default() -> Self {
        PostParams {
            cluster_join_deg: 10.0,
            cluster_new_deg: 30.0,
            plane_reject_ratio: 0.3,
            latitude_bin_deg: 6.0,
            merge_dist_ratio: 0.1,
            merge_perp_mult: 4.0,
            merge_gap_mult: 10.0,
        }
    }
}

/// Segments on one plane sharing an orientation with a referring segment.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationCluster {
    /// Indices into the plane's segment slice; the referring one is first.
    pub members: Vec<usize>,
    pub total_length: f64,
    pub direction: Vec3,
}

impl OrientationCluster {
    pub fn referring(&self) -> usize {
        self.members[0]
    }
}

/// Orientation structure of one plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneStructure {
    /// Sorted by descending total length.
    pub clusters: Vec<OrientationCluster>,
    /// Segments that neither joined a cluster nor seeded one.
    pub unclustered: Vec<usize>,
    pub total_length: f64,
}

impl PlaneStructure {
    /// Directions of the (up to) two longest clusters.
    pub fn structural_orientations(&self) -> Vec<Vec3> {
        self.clusters.iter().take(2).map(|c| c.direction).collect()
    }

    /// `l(c1) + l(c2) < ratio * l(all)`.
    pub fn is_outlier(&self, ratio: f64) -> bool {
        let top: f64 = self.clusters.iter().take(2).map(|c| c.total_length).sum();
        lt(top, ratio * self.total_length)
    }
}

fn by_length_desc(segments: &[LineSegment3D]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..segments.len()).collect();
    sort_with_ties(&mut order, |i| -segments[i].length());
    order
}

/// Greedy orientation clustering of a plane's segments, longest first.
pub fn cluster_plane_lines(segments: &[LineSegment3D], params: &PostParams) -> PlaneStructure {
    let mut clusters: Vec<OrientationCluster> = Vec::new();
    let mut unclustered = Vec::new();
    for i in by_length_desc(segments) {
        let dir = segments[i].direction();
        let angles: Vec<f64> = clusters
            .iter()
            .map(|c| undirected_angle_deg(&c.direction, &dir))
            .collect();
        if let Some(c) = angles.iter().position(|&a| lt(a, params.cluster_join_deg)) {
            clusters[c].members.push(i);
            clusters[c].total_length += segments[i].length();
        } else if angles.iter().all(|&a| !le(a, params.cluster_new_deg)) {
            clusters.push(OrientationCluster {
                members: vec![i],
                total_length: segments[i].length(),
                direction: dir,
            });
        } else {
            unclustered.push(i);
        }
    }
    clusters.sort_by(|a, b| b.total_length.total_cmp(&a.total_length));
    PlaneStructure {
        clusters,
        unclustered,
        total_length: segments.iter().map(LineSegment3D::length).sum(),
    }
}

/// Minimum segment length on a contour with structural ratio `t`.
pub fn length_threshold(t: f64, plane_scale: f64) -> f64 {
    if !le(t, 0.75) {
        10.0 * plane_scale
    } else if !lt(t, 0.5) {
        20.0 * plane_scale
    } else {
        40.0 * plane_scale
    }
}

/// Per-segment keep flags for one plane. Segments are grouped by contour;
/// each contour gets a length threshold from its structural ratio.
pub fn reject_outlier_segments(
    segments: &[LineSegment3D],
    structural: &[Vec3],
    plane_scale: f64,
    params: &PostParams,
) -> Vec<bool> {
    let mut by_contour: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in segments.iter().enumerate() {
        by_contour.entry(s.contour_id).or_default().push(i);
    }
    let mut keep = vec![false; segments.len()];
    for members in by_contour.values() {
        let total: f64 = members.iter().map(|&i| segments[i].length()).sum();
        if total <= 0.0 {
            continue;
        }
        let structural_len: f64 = members
            .iter()
            .filter(|&&i| {
                let d = segments[i].direction();
                structural
                    .iter()
                    .any(|s| lt(undirected_angle_deg(s, &d), params.cluster_join_deg))
            })
            .map(|&i| segments[i].length())
            .sum();
        let threshold = length_threshold(structural_len / total, plane_scale);
        for &i in members {
            keep[i] = !lt(segments[i].length(), threshold);
        }
    }
    keep
}

/// Normaliser for the origin-distance test: the norm of the first point,
/// or the bounding-box diagonal when the first point sits at the origin.
pub fn magnitude(cloud: &PointCloud) -> f64 {
    let diag = cloud.bbox_diagonal();
    let first = cloud.points.first().map_or(0.0, |p| p.norm());
    if first >= 1e-6 * diag && first > 0.0 {
        first
    } else if diag > 0.0 {
        diag
    } else {
        1.0
    }
}

/// Latitude in degrees of an undirected direction, in [0, 90].
pub fn latitude_deg(dir: &Vec3) -> f64 {
    let z = dir.z.abs().min(1.0);
    z.asin().to_degrees()
}

/// A segment that passed the origin-distance test against a longer one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeCandidate {
    pub target: usize,
    pub candidate: usize,
    /// `|d_target - d_candidate| / mag`.
    pub gap_ratio: f64,
    /// Perpendicular distances of the candidate's endpoints to the target line.
    pub perpendicular: [f64; 2],
    /// Gap between the projected intervals; zero when they overlap.
    pub longitudinal_gap: f64,
    pub merged: bool,
}

#[derive(Debug, Clone)]
pub struct MergeOutcome {
    /// Surviving (possibly extended) segments, in input order.
    pub segments: Vec<LineSegment3D>,
    /// Input index of each surviving segment.
    pub source: Vec<usize>,
    /// For each input segment, the input index of the survivor that absorbed
    /// it, or `None` if it survived.
    pub merged_into: Vec<Option<usize>>,
    pub candidates: Vec<MergeCandidate>,
}

/// Merges near-collinear segments; repeated until a pass merges nothing.
///
/// `plane_scales[plane_id]` gives the distance unit of each segment's plane.
pub fn merge_segments(
    segments: &[LineSegment3D],
    plane_scales: &[f64],
    mag: f64,
    params: &PostParams,
) -> MergeOutcome {
    let mut current: Vec<LineSegment3D> = segments.to_vec();
    let mut source: Vec<usize> = (0..segments.len()).collect();
    let mut merged_into: Vec<Option<usize>> = vec![None; segments.len()];
    let mut candidates = Vec::new();
    loop {
        let pass = merge_pass(&current, plane_scales, mag, params);
        for c in &pass.candidates {
            candidates.push(MergeCandidate {
                target: source[c.target],
                candidate: source[c.candidate],
                ..*c
            });
        }
        if pass.absorbed.iter().all(Option::is_none) {
            break;
        }
        for (j, into) in pass.absorbed.iter().enumerate() {
            if let Some(i) = into {
                merged_into[source[j]] = Some(source[*i]);
            }
        }
        let survivors: Vec<usize> = (0..current.len())
            .filter(|&j| pass.absorbed[j].is_none())
            .collect();
        source = survivors.iter().map(|&j| source[j]).collect();
        current = survivors.iter().map(|&j| pass.segments[j]).collect();
    }
    // Resolve chains from earlier passes onto final survivors.
    for j in 0..merged_into.len() {
        let mut target = merged_into[j];
        while let Some(t) = target {
            match merged_into[t] {
                Some(next) => target = Some(next),
                None => break,
            }
        }
        merged_into[j] = target;
    }
    MergeOutcome {
        segments: current,
        source,
        merged_into,
        candidates,
    }
}

struct PassOutcome {
    segments: Vec<LineSegment3D>,
    absorbed: Vec<Option<usize>>,
    candidates: Vec<MergeCandidate>,
}

/// One sweep: longest first, each unprocessed segment absorbs close
/// shorter ones by extending along its own line.
fn merge_pass(
    segments: &[LineSegment3D],
    plane_scales: &[f64],
    mag: f64,
    params: &PostParams,
) -> PassOutcome {
    let n = segments.len();
    let bin_count = (90.0 / params.latitude_bin_deg).ceil() as usize + 1;
    let bin_of = |s: &LineSegment3D| {
        ((latitude_deg(&s.direction()) / params.latitude_bin_deg + REL_EPS).floor() as usize).min(bin_count - 1)
    };
    let bins: Vec<usize> = segments.iter().map(bin_of).collect();
    let dist: Vec<f64> = segments.iter().map(LineSegment3D::origin_distance).collect();
    let order = by_length_desc(segments);
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut by_bin: Vec<Vec<usize>> = vec![Vec::new(); bin_count];
    for &i in &order {
        by_bin[bins[i]].push(i);
    }

    let mut out = segments.to_vec();
    let mut absorbed: Vec<Option<usize>> = vec![None; n];
    let mut candidates = Vec::new();
    let mut seen = std::collections::HashSet::new();

    for &i in &order {
        if absorbed[i].is_some() {
            continue;
        }
        let target = segments[i];
        let origin = target.a;
        let dir = target.direction();
        let scale = plane_scales.get(target.plane_id).copied().unwrap_or(0.0);
        let perp_limit = params.merge_perp_mult * scale;
        let gap_limit = params.merge_gap_mult * scale;
        let (mut lo, mut hi) = (0.0f64, target.length());

        let b = bins[i];
        let mut pool: Vec<usize> = (b.saturating_sub(1)..=(b + 1).min(bin_count - 1))
            .flat_map(|bb| by_bin[bb].iter().copied())
            .filter(|&j| rank[j] > rank[i])
            .collect();
        pool.sort_by_key(|&j| rank[j]);

        loop {
            let mut grew = false;
            for &j in &pool {
                if absorbed[j].is_some() {
                    continue;
                }
                let gap_ratio = (dist[i] - dist[j]).abs() / mag;
                if !lt(gap_ratio, params.merge_dist_ratio) {
                    continue;
                }
                let cand = &segments[j];
                let perp = [cand.a, cand.b].map(|p| (p - origin).cross(&dir).norm());
                let t = [cand.a, cand.b].map(|p| (p - origin).dot(&dir));
                let (tmin, tmax) = (t[0].min(t[1]), t[0].max(t[1]));
                let gap = (tmin - hi).max(lo - tmax).max(0.0);
                let merge = le(perp[0], perp_limit) && le(perp[1], perp_limit) && le(gap, gap_limit);
                if seen.insert((i, j)) {
                    candidates.push(MergeCandidate {
                        target: i,
                        candidate: j,
                        gap_ratio,
                        perpendicular: perp,
                        longitudinal_gap: gap,
                        merged: false,
                    });
                }
                if merge {
                    if let Some(c) = candidates
                        .iter_mut()
                        .rev()
                        .find(|c| c.target == i && c.candidate == j)
                    {
                        c.merged = true;
                        c.longitudinal_gap = gap;
                    }
                    absorbed[j] = Some(i);
                    lo = lo.min(tmin);
                    hi = hi.max(tmax);
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        out[i].a = origin + lo * dir;
        out[i].b = origin + hi * dir;
    }
    PassOutcome {
        segments: out,
        absorbed,
        candidates,
    }
}

/// Output of the whole post-processing stage.
#[derive(Debug, Clone)]
pub struct PostOutcome {
    /// Indexed by plane id.
    pub plane_kept: Vec<bool>,
    pub structures: Vec<PlaneStructure>,
    /// Segments surviving outlier removal, before merging.
    pub inliers: Vec<LineSegment3D>,
    pub merge: MergeOutcome,
}

/// Runs outlier removal per plane and then global merging.
/// `per_plane[p]` holds plane `p`'s segments.
pub fn postprocess(
    per_plane: &[Vec<LineSegment3D>],
    plane_scales: &[f64],
    mag: f64,
    params: &PostParams,
) -> PostOutcome {
    let filtered: Vec<(PlaneStructure, bool, Vec<LineSegment3D>)> = per_plane
        .par_iter()
        .enumerate()
        .map(|(p, segs)| {
            let structure = cluster_plane_lines(segs, params);
            if segs.is_empty() || structure.is_outlier(params.plane_reject_ratio) {
                return (structure, segs.is_empty(), Vec::new());
            }
            let keep = reject_outlier_segments(
                segs,
                &structure.structural_orientations(),
                plane_scales[p],
                params,
            );
            let kept = segs
                .iter()
                .zip(keep)
                .filter_map(|(s, k)| k.then_some(*s))
                .collect();
            (structure, true, kept)
        })
        .collect();

    let mut plane_kept = Vec::with_capacity(filtered.len());
    let mut structures = Vec::with_capacity(filtered.len());
    let mut inliers = Vec::new();
    for (structure, kept, segs) in filtered {
        plane_kept.push(kept);
        structures.push(structure);
        inliers.extend(segs);
    }
    let merge = merge_segments(&inliers, plane_scales, mag, params);
    PostOutcome {
        plane_kept,
        structures,
        inliers,
        merge,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn seg(a: [f64; 3], b: [f64; 3]) -> LineSegment3D {
        LineSegment3D {
            a: Vec3::from(a),
            b: Vec3::from(b),
            plane_id: 0,
            contour_id: 0,
        }
    }

    fn along(angle_deg: f64, len: f64, offset: f64) -> LineSegment3D {
        let t = angle_deg.to_radians();
        seg([0.0, offset, 0.0], [len * t.cos(), offset + len * t.sin(), 0.0])
    }

    #[test]
    fn parallel_segments_form_one_cluster() {
        let segs: Vec<_> = (0..4).map(|i| along(0.0, 1.0 + i as f64, i as f64)).collect();
        let s = cluster_plane_lines(&segs, &PostParams::default());
        assert_eq!(s.clusters.len(), 1);
        assert_eq!(s.clusters[0].members.len(), 4);
        assert_eq!(s.clusters[0].referring(), 3);
        assert!(!s.is_outlier(0.3));
    }

    #[test]
    fn rectangle_sides_form_two_orthogonal_clusters() {
        let segs = vec![
            seg([0.0, 0.0, 0.0], [10.0, 0.0, 0.0]),
            seg([10.0, 0.0, 0.0], [10.0, 5.0, 0.0]),
            seg([10.0, 5.0, 0.0], [0.0, 5.0, 0.0]),
            seg([0.0, 5.0, 0.0], [0.0, 0.0, 0.0]),
        ];
        let s = cluster_plane_lines(&segs, &PostParams::default());
        assert_eq!(s.clusters.len(), 2);
        assert_eq!(s.clusters[0].total_length, 20.0);
        assert_eq!(s.clusters[1].total_length, 10.0);
        let o = s.structural_orientations();
        assert!(o[0].dot(&o[1]).abs() < 1e-12);
    }

    #[test]
    fn rule_gap_leaves_segment_unclustered() {
        let segs = vec![along(0.0, 2.0, 0.0), along(20.0, 1.0, 1.0)];
        let s = cluster_plane_lines(&segs, &PostParams::default());
        assert_eq!(s.clusters.len(), 1);
        assert_eq!(s.unclustered, vec![1]);
        assert_eq!(s.total_length, 3.0);
    }

    fn structure_with(lengths: &[f64], total: f64) -> PlaneStructure {
        PlaneStructure {
            clusters: lengths
                .iter()
                .map(|&l| OrientationCluster { members: vec![0], total_length: l, direction: Vec3::x() })
                .collect(),
            unclustered: vec![],
            total_length: total,
        }
    }

    #[test]
    fn outlier_plane_arithmetic() {
        // 10 + 5 = 15 < 0.3 * 60 = 18.
        assert!(structure_with(&[10.0, 5.0, 4.0], 60.0).is_outlier(0.3));
        assert!(!structure_with(&[12.0, 6.0], 60.0).is_outlier(0.3));
        assert!(!structure_with(&[30.0], 30.0).is_outlier(0.3));
    }

    /// Eq.-6 decision from raw angles in degrees, independent of the vector path.
    /// Segments are given longest first.
    fn blob_oracle(angles: &[f64], lengths: &[f64]) -> bool {
        let dev = |a: f64, b: f64| {
            let d = (a - b).rem_euclid(180.0);
            d.min(180.0 - d)
        };
        let mut refs: Vec<f64> = Vec::new();
        let mut lens: Vec<f64> = Vec::new();
        for (&a, &l) in angles.iter().zip(lengths) {
            let devs: Vec<f64> = refs.iter().map(|&r| dev(a, r)).collect();
            if let Some(j) = devs.iter().position(|&d| d < 10.0) {
                lens[j] += l;
            } else if devs.iter().all(|&d| d > 30.0) {
                refs.push(a);
                lens.push(l);
            }
        }
        lens.sort_by(|a, b| b.total_cmp(a));
        lens.iter().take(2).sum::<f64>() < 0.3 * lengths.iter().sum::<f64>()
    }

    #[test]
    fn random_blob_planes_follow_the_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let trials = 300;
        for (n, min_rate) in [(20usize, 0.05), (100, 0.6)] {
            let mut dropped = 0;
            for _ in 0..trials {
                let angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..180.0)).collect();
                // Nearly equal lengths, strictly decreasing so the order is unambiguous.
                let lengths: Vec<f64> = (0..n).map(|i| 1.0 - i as f64 * 1e-4).collect();
                let segs: Vec<_> = angles.iter().zip(&lengths).enumerate().map(|(i, (&a, &l))| along(a, l, i as f64)).collect();
                let s = cluster_plane_lines(&segs, &PostParams::default());
                assert_eq!(s.is_outlier(0.3), blob_oracle(&angles, &lengths));
                dropped += s.is_outlier(0.3) as usize;
            }
            // Oracle Monte-Carlo rates: about 0.13 for 20 segments, 0.74 for 100.
            let rate = dropped as f64 / trials as f64;
            assert!(rate > min_rate, "{n} segments: drop rate {rate}");
        }
    }

    #[test]
    fn tier_thresholds() {
        assert_eq!(length_threshold(1.0, 1.0), 10.0);
        assert_eq!(length_threshold(0.76, 1.0), 10.0);
        assert_eq!(length_threshold(0.75, 1.0), 20.0);
        assert_eq!(length_threshold(6.0 / 12.0, 1.0), 20.0);
        assert_eq!(length_threshold(0.49, 1.0), 40.0);
    }

    #[test]
    fn structural_contour_keeps_long_and_drops_stub() {
        let s = 0.1;
        let side = 12.0 * s;
        let mut segs = vec![
            seg([0.0, 0.0, 0.0], [side, 0.0, 0.0]),
            seg([side, 0.0, 0.0], [side, side, 0.0]),
            seg([side, side, 0.0], [0.0, side, 0.0]),
            seg([0.0, side, 0.0], [0.0, 0.0, 0.0]),
        ];
        let structural = vec![Vec3::x(), Vec3::y()];
        let keep = reject_outlier_segments(&segs, &structural, s, &PostParams::default());
        assert_eq!(keep, vec![true; 4]);

        segs.push(seg([0.0, 0.0, 0.0], [0.0, 5.0 * s, 0.0]));
        let keep = reject_outlier_segments(&segs, &structural, s, &PostParams::default());
        assert_eq!(keep, vec![true, true, true, true, false]);
    }

    #[test]
    fn half_structural_contour_uses_middle_tier() {
        let s = 0.1;
        // Structural length 6, total 12: threshold 20 s = 2.
        let segs = vec![
            seg([0.0, 0.0, 0.0], [6.0, 0.0, 0.0]),
            along(45.0, 6.0, 1.0),
        ];
        let keep = reject_outlier_segments(&segs, &[Vec3::x()], s, &PostParams::default());
        assert_eq!(keep, vec![true, true]);
        let short = vec![seg([0.0, 0.0, 0.0], [1.9, 0.0, 0.0]), along(45.0, 1.9, 1.0)];
        let keep = reject_outlier_segments(&short, &[Vec3::x()], s, &PostParams::default());
        assert_eq!(keep, vec![false, false]);
    }

    #[test]
    fn overlapping_collinear_merge_to_hull() {
        let segs = vec![seg([0.0, 0.0, 0.0], [5.0, 0.0, 0.0]), seg([4.0, 0.0, 0.0], [9.0, 0.0, 0.0])];
        let m = merge_segments(&segs, &[0.1], 10.0, &PostParams::default());
        assert_eq!(m.segments.len(), 1);
        let s = m.segments[0];
        let (lo, hi) = (s.a.x.min(s.b.x), s.a.x.max(s.b.x));
        assert!(lo.abs() < 1e-12 && (hi - 9.0).abs() < 1e-12);
        assert_eq!(m.merged_into, vec![None, Some(0)]);
    }

    #[test]
    fn gap_beyond_threshold_blocks_merge() {
        let s = 0.1;
        let segs = vec![
            seg([0.0, 0.0, 0.0], [5.0, 0.0, 0.0]),
            seg([5.0 + 11.0 * s, 0.0, 0.0], [20.0, 0.0, 0.0]),
        ];
        let m = merge_segments(&segs, &[s], 10.0, &PostParams::default());
        assert_eq!(m.segments.len(), 2);
        let within = vec![segs[0], seg([5.0 + 9.0 * s, 0.0, 0.0], [20.0, 0.0, 0.0])];
        assert_eq!(merge_segments(&within, &[s], 10.0, &PostParams::default()).segments.len(), 1);
    }

    #[test]
    fn perpendicular_offset_blocks_merge() {
        let s = 0.1;
        let segs = vec![
            seg([0.0, 0.0, 0.0], [5.0, 0.0, 0.0]),
            seg([0.0, 5.0 * s, 0.0], [4.0, 5.0 * s, 0.0]),
        ];
        let m = merge_segments(&segs, &[s], 100.0, &PostParams::default());
        assert_eq!(m.segments.len(), 2);
        assert_eq!(m.candidates.len(), 1);
        assert!(!m.candidates[0].merged);
    }

    #[test]
    fn origin_distance_ratio_gates_candidates() {
        // Same line direction, d differs by 1 with mag 5: ratio 0.2.
        let segs = vec![seg([0.0, 0.0, 0.0], [5.0, 0.0, 0.0]), seg([0.0, 1.0, 0.0], [4.0, 1.0, 0.0])];
        let m = merge_segments(&segs, &[10.0], 5.0, &PostParams::default());
        assert!(m.candidates.is_empty());
        assert_eq!(m.segments.len(), 2);
    }

    #[test]
    fn latitude_and_distance_ignore_endpoint_order() {
        let s = seg([1.0, 2.0, 3.0], [2.0, -1.0, 0.5]);
        let r = seg([2.0, -1.0, 0.5], [1.0, 2.0, 3.0]);
        assert_eq!(latitude_deg(&s.direction()), latitude_deg(&r.direction()));
        assert!((s.origin_distance() - r.origin_distance()).abs() < 1e-12);
        assert_eq!(latitude_deg(&Vec3::z()), 90.0);
    }

    #[test]
    fn magnitude_guard() {
        let c = PointCloud::from_xyz(&[[0.0, 0.0, 0.0], [3.0, 4.0, 0.0]]);
        assert_eq!(magnitude(&c), 5.0);
        let c = PointCloud::from_xyz(&[[0.0, 3.0, 4.0], [0.0, 0.0, 0.0]]);
        assert_eq!(magnitude(&c), 5.0);
    }

    fn random_segments(seed: u64, n: usize) -> Vec<LineSegment3D> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let base = Vec3::new(rng.random_range(0.0..2.0), rng.random_range(0.0..0.3), 5.0);
                let dir = if i % 2 == 0 { Vec3::x() } else { Vec3::new(0.0, 0.02, 1.0).normalize() };
                let a = base + dir * rng.random_range(0.0..2.0);
                LineSegment3D { a, b: a + dir * rng.random_range(0.1..2.0), plane_id: i % 2, contour_id: i }
            })
            .collect()
    }

    #[test]
    fn merge_invariants() {
        for seed in 0..20 {
            let segs = random_segments(seed, 40);
            let scales = [0.05, 0.08];
            let m = merge_segments(&segs, &scales, 5.0, &PostParams::default());
            assert!(m.segments.len() <= segs.len());
            for (out, &src) in m.segments.iter().zip(&m.source) {
                assert!(out.length() >= segs[src].length() - 1e-12);
                assert_eq!(m.merged_into[src], None);
            }
            for (j, into) in m.merged_into.iter().enumerate() {
                if let Some(t) = into {
                    assert!(m.source.contains(t), "segment {j} merged into non-survivor");
                }
            }
            let again = merge_segments(&m.segments, &scales, 5.0, &PostParams::default());
            assert_eq!(again.segments.len(), m.segments.len());
            for (a, b) in again.segments.iter().zip(&m.segments) {
                assert!((a.a - b.a).norm() < 1e-9 && (a.b - b.b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn merge_candidates_are_scale_invariant() {
        let segs = random_segments(5, 40);
        let base = merge_segments(&segs, &[0.05, 0.08], 5.0, &PostParams::default());
        let pairs = |m: &MergeOutcome| m.candidates.iter().map(|c| (c.target, c.candidate, c.merged)).collect::<Vec<_>>();
        for c in [0.01, 1.0, 1000.0] {
            let scaled: Vec<_> = segs.iter().map(|s| LineSegment3D { a: s.a * c, b: s.b * c, ..*s }).collect();
            let m = merge_segments(&scaled, &[0.05 * c, 0.08 * c], 5.0 * c, &PostParams::default());
            assert_eq!(pairs(&m), pairs(&base), "scale {c}");
        }
    }
}
