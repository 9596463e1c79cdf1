//! End-to-end detection: attributes, segmentation, per-plane line
//! detection and post-processing.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::geometry::{compute_attributes, PointCloud, SpatialIndex};
use crate::line2d::{detect_plane_lines, LineSegment3D, PlaneLines};
use crate::postprocess::{magnitude, postprocess, PostOutcome};
use crate::raster::PlaneRejected;
use crate::segmentation::{segment, Segmentation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneRecord {
    pub id: usize,
    pub normal: [f64; 3],
    pub centroid: [f64; 3],
    pub scale: f64,
    pub member_count: usize,
    /// False when post-processing discarded every segment of the plane.
    pub kept: bool,
    /// Set when the plane could not be rasterized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub plane_id: usize,
    pub contour_id: usize,
    pub length: f64,
}

impl SegmentRecord {
    pub fn from_segment(s: &LineSegment3D) -> Self {
        SegmentRecord {
            a: s.a.into(),
            b: s.b.into(),
            plane_id: s.plane_id,
            contour_id: s.contour_id,
            length: s.length(),
        }
    }

    pub fn to_segment(&self) -> LineSegment3D {
        LineSegment3D {
            a: self.a.into(),
            b: self.b.into(),
            plane_id: self.plane_id,
            contour_id: self.contour_id,
        }
    }
}

/// Wall-clock seconds per stage, rounded to milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub segmentation_s: f64,
    pub line_detection_s: f64,
    pub postprocess_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub point_count: usize,
    pub planes: Vec<PlaneRecord>,
    pub segments: Vec<SegmentRecord>,
    pub timing: Timing,
    /// Per-point plane id, `u32::MAX` for unassigned points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u32>>,
}

impl DetectionResult {
    pub fn line_segments(&self) -> Vec<LineSegment3D> {
        self.segments.iter().map(SegmentRecord::to_segment).collect()
    }
}

/// Intermediate products kept for diagnostics.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub result: DetectionResult,
    pub segmentation: Segmentation,
    pub labels: Vec<u32>,
    /// Indexed by plane id; `Err` for planes that could not be rasterized.
    pub plane_lines: Vec<std::result::Result<PlaneLines, PlaneRejected>>,
    /// Segments before post-processing, with global contour ids.
    pub raw_segments: Vec<LineSegment3D>,
    pub post: Option<PostOutcome>,
}

fn millis(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

/// Runs the detector and returns its result.
pub fn run_pipeline(cloud: &PointCloud, config: &PipelineConfig) -> Result<DetectionResult> {
    run_pipeline_detailed(cloud, config).map(|run| run.result)
}

/// Runs the detector, keeping intermediate products.
pub fn run_pipeline_detailed(cloud: &PointCloud, config: &PipelineConfig) -> Result<PipelineRun> {
    config.validate()?;
    cloud.validate()?;
    if config.threads == 0 {
        return run_stages(cloud, config);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Stage {
            stage: "thread pool",
            message: e.to_string(),
        })?;
    pool.install(|| run_stages(cloud, config))
}

fn run_stages(cloud: &PointCloud, config: &PipelineConfig) -> Result<PipelineRun> {
    let start = Instant::now();
    let tag = |stage: &'static str| move |e: Error| Error::Stage { stage, message: e.to_string() };

    let index = SpatialIndex::build(cloud).map_err(tag("spatial index"))?;
    let attrs = compute_attributes(cloud, &index, config.k).map_err(tag("attributes"))?;
    drop(index);
    let segmentation = segment(cloud, &attrs, &config.grow_params(), &config.merge_params());
    drop(attrs);
    let labels = segmentation.plane_labels(cloud.len());
    let t_seg = start.elapsed().as_secs_f64();
    log::info!(
        "segmentation: {} regions, {} planes in {:.3}s",
        segmentation.regions.len(),
        segmentation.planes.len(),
        t_seg
    );

    let line_params = config.line_params();
    let plane_lines: Vec<_> = segmentation
        .planes
        .par_iter()
        .map(|p| detect_plane_lines(p, cloud, &line_params))
        .collect();
    let mut per_plane: Vec<Vec<LineSegment3D>> = Vec::with_capacity(plane_lines.len());
    let mut contour_offset = 0;
    for (plane, lines) in segmentation.planes.iter().zip(&plane_lines) {
        match lines {
            Ok(pl) => {
                per_plane.push(
                    pl.segments
                        .iter()
                        .map(|s| LineSegment3D {
                            contour_id: s.contour_id + contour_offset,
                            ..*s
                        })
                        .collect(),
                );
                contour_offset += pl.contours.len();
            }
            Err(e) => {
                log::warn!("plane {} skipped: {e}", plane.id);
                per_plane.push(Vec::new());
            }
        }
    }
    let raw_segments: Vec<LineSegment3D> = per_plane.iter().flatten().copied().collect();
    let t_lines = start.elapsed().as_secs_f64();
    log::info!("line detection: {} segments", raw_segments.len());

    let plane_scales: Vec<f64> = segmentation.planes.iter().map(|p| p.scale).collect();
    let (segments, post, plane_kept) = if config.postprocess_enabled {
        let outcome = postprocess(&per_plane, &plane_scales, magnitude(cloud), &config.post_params());
        let kept = outcome.plane_kept.clone();
        (outcome.merge.segments.clone(), Some(outcome), kept)
    } else {
        (raw_segments.clone(), None, vec![true; per_plane.len()])
    };
    let t_post = start.elapsed().as_secs_f64();
    log::info!("post-processing: {} segments", segments.len());

    let planes = segmentation
        .planes
        .iter()
        .zip(&plane_lines)
        .map(|(p, lines)| PlaneRecord {
            id: p.id,
            normal: p.normal.into(),
            centroid: p.centroid.into(),
            scale: p.scale,
            member_count: p.members.len(),
            kept: plane_kept[p.id] && lines.is_ok(),
            rejected: lines.as_ref().err().map(|e| e.to_string()),
        })
        .collect();

    let result = DetectionResult {
        point_count: cloud.len(),
        planes,
        segments: segments.iter().map(SegmentRecord::from_segment).collect(),
        timing: Timing {
            segmentation_s: millis(t_seg),
            line_detection_s: millis(t_lines - t_seg),
            postprocess_s: millis(t_post - t_lines),
            total_s: millis(t_post),
        },
        labels: None,
    };
    Ok(PipelineRun {
        result,
        segmentation,
        labels,
        plane_lines,
        raw_segments,
        post,
    })
}
