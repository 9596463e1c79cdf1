//! Contour extraction, straight-run splitting, least-squares segment fitting
//! and re-projection of 2D segments onto their 3D plane.

mod contour;
mod fit;

pub use contour::{trace_borders, trace_contours, BorderKind, Contour};
pub use fit::{fit_segment, split_closed_chain, split_open_chain, unproject, LineSegment2D};

use serde::{Deserialize, Serialize};

use crate::geometry::{PointCloud, Vec3};
use crate::raster::{rasterize_plane, PlaneFrame, PlaneRejected, Raster};
use crate::segmentation::Plane;

/// A 3D segment lying on its source plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment3D {
    pub a: Vec3,
    pub b: Vec3,
    pub plane_id: usize,
    pub contour_id: usize,
}

impl LineSegment3D {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// Unit direction from `a` to `b`.
    pub fn direction(&self) -> Vec3 {
        (self.b - self.a).normalize()
    }

    /// Distance from the coordinate origin to the infinite line.
    pub fn origin_distance(&self) -> f64 {
        self.a.cross(&self.direction()).norm()
    }
}

/// Tunables for per-plane line detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineParams {
    pub min_contour_px: usize,
    pub split_tol_px: f64,
    pub min_run_px: usize,
    pub raster_cap: usize,
}

impl Default for LineParams {
    fn default() -> Self {
        LineParams {
            min_contour_px: 40,
            split_tol_px: 2.0,
            min_run_px: 8,
            raster_cap: 16384,
        }
    }
}

/// Everything produced for one plane.
#[derive(Debug, Clone)]
pub struct PlaneLines {
    pub plane_id: usize,
    pub frame: PlaneFrame,
    pub raster: Raster,
    pub contours: Vec<Contour>,
    /// 2D segments; `contour_id` indexes `contours`.
    pub segments_2d: Vec<LineSegment2D>,
    /// `contour_id` indexes `contours` here as well.
    pub segments: Vec<LineSegment3D>,
}

/// Runs rasterization, contour tracing, splitting, fitting and
/// re-projection for one plane.
pub fn detect_plane_lines(
    plane: &Plane,
    cloud: &PointCloud,
    params: &LineParams,
) -> Result<PlaneLines, PlaneRejected> {
    let (frame, raster) = rasterize_plane(plane, cloud, params.raster_cap)?;
    let contours = trace_contours(&raster.image, params.min_contour_px);
    let mut segments_2d = Vec::new();
    for (ci, contour) in contours.iter().enumerate() {
        for run in split_closed_chain(&contour.points, params.split_tol_px, params.min_run_px) {
            if let Some(mut seg) = fit_segment(&run, params.split_tol_px) {
                seg.contour_id = ci;
                segments_2d.push(seg);
            }
        }
    }
    let segments = segments_2d
        .iter()
        .map(|s| unproject(s, &raster, &frame, plane.id))
        .collect();
    Ok(PlaneLines {
        plane_id: plane.id,
        frame,
        raster,
        contours,
        segments_2d,
        segments,
    })
}
