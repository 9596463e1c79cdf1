use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{le, PointCloud, SpatialIndex, Vec3};

/// Result of a PCA plane fit over a set of points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFit {
    pub centroid: Vec3,
    /// Unit eigenvector of the smallest eigenvalue.
    pub normal: Vec3,
    /// Covariance eigenvalues, descending, clamped to be non-negative.
    pub eigenvalues: [f64; 3],
}

impl PlaneFit {
    /// Smallest covariance eigenvalue.
    pub fn curvature(&self) -> f64 {
        self.eigenvalues[2]
    }
}

/// Fits a plane by eigendecomposition of the population covariance.
/// Returns `None` for an empty input.
pub fn fit_plane<'a, I>(points: I) -> Option<PlaneFit>
where
    I: IntoIterator<Item = &'a Vec3>,
    I::IntoIter: Clone,
{
    let points = points.into_iter();
    let mut n = 0usize;
    let mut sum = Vec3::zeros();
    for p in points.clone() {
        sum += p;
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let centroid = sum / n as f64;
    let mut cov = Matrix3::<f64>::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= n as f64;
    let (normal, eigenvalues) = smallest_eigenpair(&cov);
    Some(PlaneFit {
        centroid,
        normal,
        eigenvalues,
    })
}

fn smallest_eigenpair(cov: &Matrix3<f64>) -> (Vec3, [f64; 3]) {
    let eig = SymmetricEigen::new(*cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut values = order.map(|i| eig.eigenvalues[i].max(0.0));
    // Eigenvalues at round-off level are zero; keeps ties scale-invariant.
    let floor = 1e-12 * values[0];
    for v in &mut values[1..] {
        if *v <= floor {
            *v = 0.0;
        }
    }
    let v = eig.eigenvectors.column(order[2]).into_owned();
    let norm = v.norm();
    let normal = if norm > 0.0 && norm.is_finite() {
        canonical_sign(v / norm)
    } else {
        Vec3::z()
    };
    (normal, values)
}

/// Flips `n` so its largest component is positive; near-equal magnitudes
/// resolve to the first axis.
fn canonical_sign(n: Vec3) -> Vec3 {
    let big = n.amax();
    let lead = (0..3).find(|&i| le(big, n[i].abs())).unwrap_or(0);
    if n[lead] < 0.0 {
        -n
    } else {
        n
    }
}

/// Per-point differential attributes, stored column-wise.
#[derive(Debug, Clone)]
pub struct PointAttributes {
    neighbor_count: usize,
    normals: Vec<Vec3>,
    curvature: Vec<f64>,
    scale: Vec<f64>,
    assignable: Vec<bool>,
    neighbors: Vec<u32>,
}

impl PointAttributes {
    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// Neighbours stored per point (`min(k, N - 1)`).
    pub fn neighbor_count(&self) -> usize {
        self.neighbor_count
    }

    pub fn normal(&self, i: usize) -> Vec3 {
        self.normals[i]
    }

    pub fn curvature(&self, i: usize) -> f64 {
        self.curvature[i]
    }

    pub fn scale(&self, i: usize) -> f64 {
        self.scale[i]
    }

    pub fn scales(&self) -> &[f64] {
        &self.scale
    }

    /// False when the neighbourhood is degenerate and the normal undefined.
    pub fn is_assignable(&self, i: usize) -> bool {
        self.assignable[i]
    }

    /// Neighbour indices of point `i`, nearest first.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        let k = self.neighbor_count;
        &self.neighbors[i * k..(i + 1) * k]
    }

    pub fn flip_normals(&mut self) {
        for n in &mut self.normals {
            *n = -*n;
        }
    }

    /// Assembles attributes from precomputed columns; mainly for tests.
    pub fn from_parts(
        normals: Vec<Vec3>,
        curvature: Vec<f64>,
        scale: Vec<f64>,
        neighbors: Vec<Vec<u32>>,
    ) -> Self {
        let neighbor_count = neighbors.first().map_or(0, Vec::len);
        assert!(neighbors.iter().all(|n| n.len() == neighbor_count));
        PointAttributes {
            neighbor_count,
            assignable: vec![true; normals.len()],
            normals,
            curvature,
            scale,
            neighbors: neighbors.into_iter().flatten().collect(),
        }
    }
}

#[derive(Clone, Copy)]
struct PointPca {
    normal: Vec3,
    curvature: f64,
    scale: f64,
    assignable: bool,
}

/// Computes normal, curvature, scale and neighbour list for every point.
///
/// The PCA neighbourhood is the point itself plus its `k` nearest
/// neighbours. Scale is the distance to the third-closest neighbour, clamped
/// below by `1e-9` times the bounding-box diagonal so duplicates never yield
/// a zero threshold.
pub fn compute_attributes(
    cloud: &PointCloud,
    index: &SpatialIndex,
    k: usize,
) -> Result<PointAttributes> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "k must be at least 3, got {k}"
        )));
    }
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = cloud.len();
    let kk = k.min(n - 1);
    let min_len = 1e-9 * cloud.bbox_diagonal();

    let mut neighbors = vec![0u32; n * kk];
    let mut pca = vec![
        PointPca {
            normal: Vec3::z(),
            curvature: 0.0,
            scale: min_len,
            assignable: false,
        };
        n
    ];

    let work = |i: usize, slot: &mut [u32], out: &mut PointPca, bufs: &mut (Vec<(f64, u32)>, Vec<u32>)| {
        let (buf, hood_idx) = bufs;
        index.neighbors_into(cloud, i, kk, buf);
        for (s, &(_, j)) in slot.iter_mut().zip(buf.iter()) {
            *s = j;
        }
        let scale = buf
            .get(2)
            .or(buf.last())
            .map_or(0.0, |&(d2, _)| d2.sqrt())
            .max(min_len);
        // Accumulate in index order so equal neighbourhoods give bit-equal fits.
        hood_idx.clear();
        hood_idx.push(i as u32);
        hood_idx.extend(buf.iter().map(|&(_, j)| j));
        hood_idx.sort_unstable();
        let hood = hood_idx.iter().map(|&j| &cloud.points[j as usize]);
        let mut fit = None;
        if !buf.is_empty() {
            fit = fit_plane(hood);
        }
        *out = match fit {
            Some(f) if f.eigenvalues[0] > min_len * min_len => PointPca {
                normal: f.normal,
                curvature: f.curvature(),
                scale,
                assignable: true,
            },
            _ => PointPca {
                normal: Vec3::z(),
                curvature: 0.0,
                scale,
                assignable: false,
            },
        };
    };

    if kk == 0 {
        // A single point has no neighbourhood at all.
        pca.iter_mut().enumerate().for_each(|(i, out)| {
            work(i, &mut [], out, &mut (Vec::new(), Vec::new()));
        });
    } else {
        neighbors
            .par_chunks_mut(kk)
            .zip(pca.par_iter_mut())
            .enumerate()
            .for_each_init(
                || (Vec::with_capacity(kk + 1), Vec::with_capacity(kk + 1)),
                |buf, (i, (slot, out))| work(i, slot, out, buf),
            );
    }

    Ok(PointAttributes {
        neighbor_count: kk,
        normals: pca.iter().map(|p| p.normal).collect(),
        curvature: pca.iter().map(|p| p.curvature).collect(),
        scale: pca.iter().map(|p| p.scale).collect(),
        assignable: pca.iter().map(|p| p.assignable).collect(),
        neighbors,
    })
}
