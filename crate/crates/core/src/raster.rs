//! Projection of a plane's members into an in-plane frame and gridding into
//! a binary image, followed by a 3x3 morphological closing.

use std::io::Write;

use thiserror::Error;

use crate::geometry::{PointCloud, Vec3, REL_EPS};
use crate::segmentation::Plane;

/// Reasons a plane is skipped by the line detection stage.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlaneRejected {
    #[error("all members project onto the centroid")]
    Degenerate,
    #[error("plane scale {0} is not positive")]
    ZeroScale(f64),
    #[error("raster {width}x{height} exceeds cap {cap}")]
    TooLarge { width: u64, height: u64, cap: usize },
}

/// Orthonormal in-plane frame: `y_axis = x_axis × normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFrame {
    pub origin: Vec3,
    pub x_axis: Vec3,
    pub y_axis: Vec3,
    pub normal: Vec3,
}

impl PlaneFrame {
    /// Builds the frame from the first member whose in-plane projection is
    /// distinct from the centroid.
    pub fn build(plane: &Plane, cloud: &PointCloud) -> Result<Self, PlaneRejected> {
        Self::from_points(
            plane.centroid,
            plane.normal,
            plane.scale,
            plane.members.iter().map(|&m| &cloud.points[m as usize]),
        )
    }

    pub fn from_points<'a>(
        origin: Vec3,
        normal: Vec3,
        scale: f64,
        members: impl IntoIterator<Item = &'a Vec3>,
    ) -> Result<Self, PlaneRejected> {
        let normal = normal.normalize();
        let min_offset = 1e-9 * scale;
        for p in members {
            let d = p - origin;
            let inplane = d - d.dot(&normal) * normal;
            let len = inplane.norm();
            if len > min_offset && len > 0.0 {
                let x_axis = inplane / len;
                let y_axis = x_axis.cross(&normal);
                return Ok(PlaneFrame {
                    origin,
                    x_axis,
                    y_axis,
                    normal,
                });
            }
        }
        Err(PlaneRejected::Degenerate)
    }

    /// In-plane coordinates of the orthogonal projection of `p`.
    pub fn project(&self, p: &Vec3) -> [f64; 2] {
        let d = p - self.origin;
        let inplane = d - d.dot(&self.normal) * self.normal;
        [inplane.dot(&self.x_axis), inplane.dot(&self.y_axis)]
    }

    pub fn unproject(&self, xy: [f64; 2]) -> Vec3 {
        self.origin + xy[0] * self.x_axis + xy[1] * self.y_axis
    }
}

/// Row-major binary image; `(u, v)` is (column, row).
#[derive(Clone, PartialEq, Eq)]
pub struct Bitmap {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl std::fmt::Debug for Bitmap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Bitmap {}x{}", self.width, self.height)?;
        for v in 0..self.height.min(64) {
            let row: String = (0..self.width.min(128))
                .map(|u| if self.get(u, v) { '#' } else { '.' })
                .collect();
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

impl Bitmap {
    pub fn new(width: usize, height: usize) -> Self {
        Bitmap {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    /// Parses rows of `#` (set) and anything else (unset).
    pub fn from_rows(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut b = Bitmap::new(width, height);
        for (v, row) in rows.iter().enumerate() {
            for (u, c) in row.bytes().enumerate() {
                b.set(u, v, c == b'#');
            }
        }
        b
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.data[v * self.width + u]
    }

    /// Like [`get`](Self::get) but false outside the image.
    #[inline]
    pub fn get_signed(&self, u: isize, v: isize) -> bool {
        u >= 0
            && v >= 0
            && (u as usize) < self.width
            && (v as usize) < self.height
            && self.get(u as usize, v as usize)
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: bool) {
        self.data[v * self.width + u] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Set pixels as `(u, v)`, row by row.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i % self.width, i / self.width))
    }

    fn padded(&self, pad: usize) -> Bitmap {
        let mut out = Bitmap::new(self.width + 2 * pad, self.height + 2 * pad);
        for v in 0..self.height {
            let src = &self.data[v * self.width..(v + 1) * self.width];
            let start = (v + pad) * out.width + pad;
            out.data[start..start + self.width].copy_from_slice(src);
        }
        out
    }

    fn cropped(&self, pad: usize) -> Bitmap {
        let w = self.width - 2 * pad;
        let h = self.height - 2 * pad;
        let mut out = Bitmap::new(w, h);
        for v in 0..h {
            let start = (v + pad) * self.width + pad;
            out.data[v * w..(v + 1) * w].copy_from_slice(&self.data[start..start + w]);
        }
        out
    }

    /// 3x3 dilation; pixels outside the image count as unset.
    pub fn dilate(&self) -> Bitmap {
        self.filter3(|a, b, c| a | b | c)
    }

    /// 3x3 erosion; pixels outside the image count as unset.
    pub fn erode(&self) -> Bitmap {
        self.filter3(|a, b, c| a & b & c)
    }

    /// Separable 3x3 filter with out-of-image pixels read as unset.
    fn filter3(&self, op: impl Fn(bool, bool, bool) -> bool) -> Bitmap {
        let (w, h) = (self.width, self.height);
        let mut horiz = Bitmap::new(w, h);
        for v in 0..h {
            for u in 0..w {
                let l = u > 0 && self.get(u - 1, v);
                let r = u + 1 < w && self.get(u + 1, v);
                horiz.set(u, v, op(l, self.get(u, v), r));
            }
        }
        let mut out = Bitmap::new(w, h);
        for v in 0..h {
            for u in 0..w {
                let t = v > 0 && horiz.get(u, v - 1);
                let b = v + 1 < h && horiz.get(u, v + 1);
                out.set(u, v, op(t, horiz.get(u, v), b));
            }
        }
        out
    }

    /// Dilation then erosion on a copy padded by one pixel, so pixels on
    /// the image border are not eroded away.
    pub fn close(&self) -> Bitmap {
        self.padded(1).dilate().erode().cropped(1)
    }

    /// Writes the image as a plain-text portable bitmap (P1).
    pub fn write_pbm(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "P1\n{} {}", self.width, self.height)?;
        for v in 0..self.height {
            let row: Vec<&str> = (0..self.width)
                .map(|u| if self.get(u, v) { "1" } else { "0" })
                .collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Binary occupancy image of one plane.
#[derive(Debug, Clone)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub x_min: f64,
    pub y_min: f64,
    /// Occupancy after closing.
    pub image: Bitmap,
    /// Sorted `(pixel, member point)` pairs, recorded before closing.
    pixel_points: Vec<(u32, u32)>,
}

impl Raster {
    /// Cloud indices of the points gridded into pixel `(u, v)`.
    pub fn points_at(&self, u: usize, v: usize) -> impl Iterator<Item = u32> + '_ {
        let key = (v * self.width + u) as u32;
        let start = self.pixel_points.partition_point(|&(p, _)| p < key);
        self.pixel_points[start..]
            .iter()
            .take_while(move |&&(p, _)| p == key)
            .map(|&(_, m)| m)
    }

    /// Pixel `(u, v)` holding each member, in member order.
    pub fn occupied_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pixel_points
            .iter()
            .map(|&(p, _)| (p as usize % self.width, p as usize / self.width))
    }

    /// Plane coordinates of a continuous pixel position, with integer
    /// coordinates at pixel centres.
    pub fn pixel_to_plane(&self, uv: [f64; 2]) -> [f64; 2] {
        [
            (uv[0] + 0.5) * self.cell_size + self.x_min,
            (uv[1] + 0.5) * self.cell_size + self.y_min,
        ]
    }
}

/// Pixel cell of a plane coordinate.
pub fn grid_index(value: f64, min: f64, cell: f64) -> i64 {
    ((value - min) / cell + REL_EPS).floor() as i64
}

/// Grids projected members into a raster of the plane's scale and closes
/// small holes. `members` and `projected` are parallel.
pub fn rasterize(
    scale: f64,
    members: &[u32],
    projected: &[[f64; 2]],
    cap: usize,
) -> Result<Raster, PlaneRejected> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(PlaneRejected::ZeroScale(scale));
    }
    if projected.is_empty() {
        return Err(PlaneRejected::Degenerate);
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for xy in projected {
        for a in 0..2 {
            lo[a] = lo[a].min(xy[a]);
            hi[a] = hi[a].max(xy[a]);
        }
    }
    let width = grid_index(hi[0], lo[0], scale) as u64 + 1;
    let height = grid_index(hi[1], lo[1], scale) as u64 + 1;
    if width > cap as u64 || height > cap as u64 {
        return Err(PlaneRejected::TooLarge { width, height, cap });
    }
    let (width, height) = (width as usize, height as usize);

    let mut image = Bitmap::new(width, height);
    let mut pixel_points = Vec::with_capacity(projected.len());
    for (&m, xy) in members.iter().zip(projected) {
        let u = (grid_index(xy[0], lo[0], scale) as usize).min(width - 1);
        let v = (grid_index(xy[1], lo[1], scale) as usize).min(height - 1);
        image.set(u, v, true);
        pixel_points.push(((v * width + u) as u32, m));
    }
    pixel_points.sort_unstable();

    Ok(Raster {
        width,
        height,
        cell_size: scale,
        x_min: lo[0],
        y_min: lo[1],
        image: image.close(),
        pixel_points,
    })
}

/// Frame construction, projection and rasterization for one plane.
pub fn rasterize_plane(
    plane: &Plane,
    cloud: &PointCloud,
    cap: usize,
) -> Result<(PlaneFrame, Raster), PlaneRejected> {
    let frame = PlaneFrame::build(plane, cloud)?;
    let projected: Vec<[f64; 2]> = plane
        .members
        .iter()
        .map(|&m| frame.project(&cloud.points[m as usize]))
        .collect();
    let raster = rasterize(plane.scale, &plane.members, &projected, cap)?;
    Ok((frame, raster))
}
