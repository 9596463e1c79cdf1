//! Curvature-ordered region growing followed by merging of adjacent
//! coplanar regions into planes.

use crate::geometry::{fit_plane, lt, sort_with_ties, PointAttributes, PointCloud, Vec3};

/// Label of a point that belongs to no region.
pub const UNLABELED: u32 = u32::MAX;

/// Thresholds for point-level growing. Distances are multiples of the seed
/// point's scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowParams {
    pub theta_deg: f64,
    pub th_o_mult: f64,
    pub th_p_mult: f64,
}

impl Default for GrowParams {
    fn default() -> Self {
        GrowParams {
            theta_deg: 15.0,
            th_o_mult: 1.0,
            th_p_mult: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeParams {
    pub theta_deg: f64,
    /// Merged groups with fewer members are discarded.
    pub min_plane_points: usize,
    /// Multiplier on `0.75 * P90` of member scales.
    pub plane_scale_mult: f64,
}

impl Default for MergeParams {
    fn default() -> Self {
        MergeParams {
            theta_deg: 15.0,
            min_plane_points: 30,
            plane_scale_mult: 1.0,
        }
    }
}

/// A region produced by point-level growing.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: usize,
    /// Member indices in growth order; the seed comes first.
    pub members: Vec<u32>,
    pub normal: Vec3,
    pub centroid: Vec3,
    pub curvature: f64,
    /// Mean member point scale.
    pub scale: f64,
    pub seed: u32,
    /// Whether `normal` comes from a PCA fit (needs at least 3 members, not
    /// all collinear).
    pub fitted: bool,
    /// Line direction of collinear regions with at least 2 distinct points.
    pub axis: Option<Vec3>,
}

/// A merged planar region.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub id: usize,
    pub normal: Vec3,
    pub centroid: Vec3,
    /// Member indices, ascending.
    pub members: Vec<u32>,
    pub scale: f64,
    pub adjacent: Vec<usize>,
}

/// Grows regions from seeds of ascending curvature. Each candidate is tested
/// against the seed: normal angle below `theta`, orthogonal offset below
/// `th_o * s_seed`, distance below `th_p * s_seed`.
pub fn grow_regions(
    cloud: &PointCloud,
    attrs: &PointAttributes,
    params: &GrowParams,
) -> Vec<Region> {
    let n = cloud.len();
    let cos_theta = params.theta_deg.to_radians().cos();
    let mut order: Vec<u32> = (0..n as u32)
        .filter(|&i| attrs.is_assignable(i as usize))
        .collect();
    sort_with_ties(&mut order, |i| attrs.curvature(i as usize));

    let mut taken = vec![false; n];
    let mut regions = Vec::new();
    for &seed in &order {
        let s = seed as usize;
        if taken[s] {
            continue;
        }
        taken[s] = true;
        let seed_pos = cloud.points[s];
        let seed_normal = attrs.normal(s);
        let th_o = params.th_o_mult * attrs.scale(s);
        let th_p2 = (params.th_p_mult * attrs.scale(s)).powi(2);

        let mut members = vec![seed];
        let mut cursor = 0;
        while cursor < members.len() {
            let cur = members[cursor] as usize;
            for &j in attrs.neighbors(cur) {
                let ju = j as usize;
                if taken[ju] || !attrs.is_assignable(ju) {
                    continue;
                }
                if seed_normal.dot(&attrs.normal(ju)).abs() <= cos_theta {
                    continue;
                }
                let d = cloud.points[ju] - seed_pos;
                if !lt(seed_normal.dot(&d).abs(), th_o) || !lt(d.norm_squared(), th_p2) {
                    continue;
                }
                taken[ju] = true;
                members.push(j);
            }
            cursor += 1;
        }
        regions.push(make_region(regions.len(), members, cloud, attrs));
    }
    regions
}

fn make_region(id: usize, members: Vec<u32>, cloud: &PointCloud, attrs: &PointAttributes) -> Region {
    let seed = members[0];
    let scale =
        members.iter().map(|&i| attrs.scale(i as usize)).sum::<f64>() / members.len() as f64;
    let mut sorted = members.clone();
    sorted.sort_unstable();
    let fit = fit_plane(sorted.iter().map(|&i| &cloud.points[i as usize]))
        .expect("region has at least its seed");
    // Collinear members leave the normal undetermined.
    let fitted = members.len() >= 3 && fit.eigenvalues[1] > 0.0;
    let axis = if fitted { None } else { line_axis(&sorted, cloud) };
    Region {
        id,
        normal: if fitted {
            fit.normal
        } else {
            attrs.normal(seed as usize)
        },
        centroid: fit.centroid,
        curvature: fit.curvature(),
        scale,
        seed,
        members,
        fitted,
        axis,
    }
}

/// Direction from the first member to the member farthest from it.
fn line_axis(members: &[u32], cloud: &PointCloud) -> Option<Vec3> {
    let first = cloud.points[*members.first()? as usize];
    let far = members
        .iter()
        .map(|&m| cloud.points[m as usize] - first)
        .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))?;
    let len = far.norm();
    (len > 0.0).then(|| far / len)
}

/// Per-point region label, [`UNLABELED`] where no region claims the point.
pub fn region_labels(n: usize, regions: &[Region]) -> Vec<u32> {
    let mut labels = vec![UNLABELED; n];
    for r in regions {
        for &m in &r.members {
            labels[m as usize] = r.id as u32;
        }
    }
    labels
}

/// Region adjacency: two regions touch when a member of one lists a member
/// of the other among its nearest neighbours. Lists are sorted and
/// symmetric.
pub fn find_adjacent_regions(
    attrs: &PointAttributes,
    labels: &[u32],
    region_count: usize,
) -> Vec<Vec<usize>> {
    let mut adjacency = vec![Vec::new(); region_count];
    for (m, &lm) in labels.iter().enumerate() {
        if lm == UNLABELED {
            continue;
        }
        for &nb in attrs.neighbors(m) {
            let ln = labels[nb as usize];
            if ln != UNLABELED && ln != lm {
                adjacency[lm as usize].push(ln as usize);
                adjacency[ln as usize].push(lm as usize);
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }
    adjacency
}

/// Groups of region ids produced by seed-ordered merging, before plane
/// fitting and size filtering.
pub fn merge_groups(regions: &[Region], adjacency: &[Vec<usize>], theta_deg: f64) -> Vec<Vec<usize>> {
    let cos_theta = theta_deg.to_radians().cos();
    let sin_theta = theta_deg.to_radians().sin();
    let mut order: Vec<usize> = (0..regions.len()).collect();
    sort_with_ties(&mut order, |r| regions[r].curvature);
    // Regions without a plane fit never seed. Collinear ones can still join a
    // group whose normal is perpendicular to their axis; the rest end up as
    // singleton groups.
    order.sort_by_key(|&r| !regions[r].fitted);

    let mut grouped = vec![false; regions.len()];
    let mut groups = Vec::new();
    for &s in &order {
        if grouped[s] {
            continue;
        }
        grouped[s] = true;
        let seed = &regions[s];
        let mut group = vec![s];
        if seed.fitted {
            let mut cursor = 0;
            while cursor < group.len() {
                let cur = group[cursor];
                for &j in &adjacency[cur] {
                    if grouped[j] {
                        continue;
                    }
                    let r = &regions[j];
                    let aligned = match (r.fitted, r.axis) {
                        (true, _) => seed.normal.dot(&r.normal).abs() > cos_theta,
                        (false, Some(axis)) => seed.normal.dot(&axis).abs() < sin_theta,
                        (false, None) => false,
                    };
                    if !aligned {
                        continue;
                    }
                    if !lt(seed.normal.dot(&(r.centroid - seed.centroid)).abs(), seed.scale) {
                        continue;
                    }
                    grouped[j] = true;
                    group.push(j);
                }
                cursor += 1;
            }
        }
        groups.push(group);
    }
    groups
}

/// Merges adjacent coplanar regions and fits the final planes. Groups below
/// `min_plane_points` members are dropped; surviving planes are numbered
/// consecutively in merge-seed order.
pub fn merge_regions(
    cloud: &PointCloud,
    attrs: &PointAttributes,
    regions: &[Region],
    adjacency: &[Vec<usize>],
    params: &MergeParams,
) -> Vec<Plane> {
    let groups = merge_groups(regions, adjacency, params.theta_deg);
    let mut region_plane = vec![usize::MAX; regions.len()];
    let mut planes = Vec::new();
    for group in groups {
        let mut members: Vec<u32> = group
            .iter()
            .flat_map(|&r| regions[r].members.iter().copied())
            .collect();
        if members.len() < params.min_plane_points.max(1) {
            continue;
        }
        members.sort_unstable();
        let fit = fit_plane(members.iter().map(|&i| &cloud.points[i as usize]))
            .expect("non-empty group");
        let id = planes.len();
        for &r in &group {
            region_plane[r] = id;
        }
        let scales: Vec<f64> = members.iter().map(|&i| attrs.scale(i as usize)).collect();
        planes.push(Plane {
            id,
            normal: fit.normal,
            centroid: fit.centroid,
            scale: params.plane_scale_mult * 0.75 * percentile_90(scales),
            members,
            adjacent: Vec::new(),
        });
    }

    for (r, list) in adjacency.iter().enumerate() {
        let p = region_plane[r];
        if p == usize::MAX {
            continue;
        }
        for &other in list {
            let q = region_plane[other];
            if q != usize::MAX && q != p {
                planes[p].adjacent.push(q);
            }
        }
    }
    for plane in &mut planes {
        plane.adjacent.sort_unstable();
        plane.adjacent.dedup();
    }
    planes
}

/// Nearest-rank 90th percentile.
fn percentile_90(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let rank = ((0.9 * values.len() as f64).ceil() as usize).clamp(1, values.len());
    values[rank - 1]
}

/// Everything the segmentation stage produces.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub regions: Vec<Region>,
    pub planes: Vec<Plane>,
}

impl Segmentation {
    /// Per-point plane label, [`UNLABELED`] for points on no plane.
    pub fn plane_labels(&self, n: usize) -> Vec<u32> {
        let mut labels = vec![UNLABELED; n];
        for p in &self.planes {
            for &m in &p.members {
                labels[m as usize] = p.id as u32;
            }
        }
        labels
    }
}

pub fn segment(
    cloud: &PointCloud,
    attrs: &PointAttributes,
    grow: &GrowParams,
    merge: &MergeParams,
) -> Segmentation {
    let regions = grow_regions(cloud, attrs, grow);
    let labels = region_labels(cloud.len(), &regions);
    let adjacency = find_adjacent_regions(attrs, &labels, regions.len());
    let planes = merge_regions(cloud, attrs, &regions, &adjacency, merge);
    Segmentation { regions, planes }
}
