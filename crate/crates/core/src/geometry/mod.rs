//! Point container, exact k-d tree search and per-point PCA attributes.

mod attributes;
mod kdtree;

pub use attributes::{compute_attributes, fit_plane, PlaneFit, PointAttributes};
pub use kdtree::SpatialIndex;

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Relative slack applied when comparing against thresholds. Values this
/// close to a threshold count as equal to it, so lattice-sampled inputs
/// resolve boundary cases the same way regardless of unit of length.
pub const REL_EPS: f64 = 1e-9;

/// `a < b` with values within [`REL_EPS`] of `b` treated as equal.
pub fn lt(a: f64, b: f64) -> bool {
    a < b - REL_EPS * b.abs()
}

/// `a <= b` with values within [`REL_EPS`] of `b` treated as equal.
pub fn le(a: f64, b: f64) -> bool {
    a <= b + REL_EPS * b.abs()
}

/// Sorts `items` by ascending `key`, treating keys within [`REL_EPS`] of the
/// smallest key of their run as tied and ordering ties by item.
pub fn sort_with_ties<T: Ord + Copy>(items: &mut [T], key: impl Fn(T) -> f64) {
    items.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    let mut start = 0;
    while start < items.len() {
        let anchor = key(items[start]);
        let end = start
            + items[start..]
                .iter()
                .position(|&x| !le(key(x), anchor))
                .unwrap_or(items.len() - start);
        items[start..end].sort_unstable();
        start = end;
    }
}

/// An unorganized point cloud. Point order is the identity used everywhere
/// downstream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    /// Per-point RGB, carried through untouched.
    pub colors: Option<Vec<[u8; 3]>>,
    /// Trailing text columns of XYZ/PTS rows, carried through untouched.
    pub extras: Option<Vec<String>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        PointCloud {
            points,
            colors: None,
            extras: None,
        }
    }

    pub fn from_xyz(coords: &[[f64; 3]]) -> Self {
        Self::new(coords.iter().map(|c| Vec3::new(c[0], c[1], c[2])).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks the invariants every pipeline stage relies on.
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(index) = self
            .points
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(Error::NonFinite { index });
        }
        if self.points.len() >= u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "{} points exceed the supported maximum",
                self.points.len()
            )));
        }
        Ok(())
    }

    /// Axis-aligned bounds as (min, max). Returns zeros for an empty cloud.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut it = self.points.iter();
        let Some(first) = it.next() else {
            return (Vec3::zeros(), Vec3::zeros());
        };
        it.fold((*first, *first), |(lo, hi), p| (lo.inf(p), hi.sup(p)))
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounds();
        (hi - lo).norm()
    }

    /// Returns a copy with every point mapped through `f`.
    pub fn map_points(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        PointCloud {
            points: self.points.iter().map(f).collect(),
            colors: self.colors.clone(),
            extras: self.extras.clone(),
        }
    }
}

/// Undirected angle between two directions, in degrees, within [0, 90].
pub fn undirected_angle_deg(a: &Vec3, b: &Vec3) -> f64 {
    let c = (a.dot(b) / (a.norm() * b.norm())).abs().min(1.0);
    c.acos().to_degrees()
}
