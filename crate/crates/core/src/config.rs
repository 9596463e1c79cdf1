//! Pipeline configuration with `key = value` file support.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::line2d::LineParams;
use crate::postprocess::PostParams;
use crate::segmentation::{GrowParams, MergeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k: usize,
    pub theta_deg: f64,
    pub th_o_mult: f64,
    pub th_p_mult: f64,
    pub min_plane_points: usize,
    pub plane_scale_mult: f64,
    pub raster_cap: usize,
    pub min_contour_px: usize,
    pub split_tol_px: f64,
    pub min_run_px: usize,
    pub cluster_join_deg: f64,
    pub cluster_new_deg: f64,
    pub plane_reject_ratio: f64,
    pub latitude_bin_deg: f64,
    pub merge_dist_ratio: f64,
    pub merge_perp_mult: f64,
    pub merge_gap_mult: f64,
    pub postprocess_enabled: bool,
    /// Worker threads; `0` uses all cores.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: 20,
            theta_deg: 15.0,
            th_o_mult: 1.0,
            th_p_mult: 50.0,
            min_plane_points: 30,
            plane_scale_mult: 1.0,
            raster_cap: 16384,
            min_contour_px: 40,
            split_tol_px: 2.0,
            min_run_px: 8,
            cluster_join_deg: 10.0,
            cluster_new_deg: 30.0,
            plane_reject_ratio: 0.3,
            latitude_bin_deg: 6.0,
            merge_dist_ratio: 0.1,
            merge_perp_mult: 4.0,
            merge_gap_mult: 10.0,
            postprocess_enabled: true,
            threads: 0,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse `{value}` for `{key}`")))
}

impl PipelineConfig {
    pub const KEYS: [&'static str; 19] = [
        "k",
        "theta_deg",
        "th_o_mult",
        "th_p_mult",
        "min_plane_points",
        "plane_scale_mult",
        "raster_cap",
        "min_contour_px",
        "split_tol_px",
        "min_run_px",
        "cluster_join_deg",
        "cluster_new_deg",
        "plane_reject_ratio",
        "latitude_bin_deg",
        "merge_dist_ratio",
        "merge_perp_mult",
        "merge_gap_mult",
        "postprocess_enabled",
        "threads",
    ];

    /// Sets one field by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "k" => self.k = parse_value(key, v)?,
            "theta_deg" => self.theta_deg = parse_value(key, v)?,
            "th_o_mult" => self.th_o_mult = parse_value(key, v)?,
            "th_p_mult" => self.th_p_mult = parse_value(key, v)?,
            "min_plane_points" => self.min_plane_points = parse_value(key, v)?,
            "plane_scale_mult" => self.plane_scale_mult = parse_value(key, v)?,
            "raster_cap" => self.raster_cap = parse_value(key, v)?,
            "min_contour_px" => self.min_contour_px = parse_value(key, v)?,
            "split_tol_px" => self.split_tol_px = parse_value(key, v)?,
            "min_run_px" => self.min_run_px = parse_value(key, v)?,
            "cluster_join_deg" => self.cluster_join_deg = parse_value(key, v)?,
            "cluster_new_deg" => self.cluster_new_deg = parse_value(key, v)?,
            "plane_reject_ratio" => self.plane_reject_ratio = parse_value(key, v)?,
            "latitude_bin_deg" => self.latitude_bin_deg = parse_value(key, v)?,
            "merge_dist_ratio" => self.merge_dist_ratio = parse_value(key, v)?,
            "merge_perp_mult" => self.merge_perp_mult = parse_value(key, v)?,
            "merge_gap_mult" => self.merge_gap_mult = parse_value(key, v)?,
            "postprocess_enabled" => self.postprocess_enabled = parse_value(key, v)?,
            "threads" => self.threads = parse_value(key, v)?,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown configuration key `{other}`"
                )))
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: n + 1,
                    message: "expected `key = value`".into(),
                });
            };
            self.set(key, value).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: n + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.k < 3 {
            return bad(format!("k must be at least 3, got {}", self.k));
        }
        for (name, v) in [
            ("theta_deg", self.theta_deg),
            ("cluster_join_deg", self.cluster_join_deg),
            ("cluster_new_deg", self.cluster_new_deg),
            ("latitude_bin_deg", self.latitude_bin_deg),
        ] {
            if !(v > 0.0 && v < 90.0) {
                return bad(format!("{name} must lie in (0, 90), got {v}"));
            }
        }
        for (name, v) in [
            ("th_o_mult", self.th_o_mult),
            ("th_p_mult", self.th_p_mult),
            ("plane_scale_mult", self.plane_scale_mult),
            ("split_tol_px", self.split_tol_px),
            ("plane_reject_ratio", self.plane_reject_ratio),
            ("merge_dist_ratio", self.merge_dist_ratio),
            ("merge_perp_mult", self.merge_perp_mult),
            ("merge_gap_mult", self.merge_gap_mult),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.raster_cap == 0 || self.min_run_px < 2 {
            return bad("raster_cap must be positive and min_run_px at least 2".into());
        }
        Ok(())
    }

    pub fn grow_params(&self) -> GrowParams {
        GrowParams {
            theta_deg: self.theta_deg,
            th_o_mult: self.th_o_mult,
            th_p_mult: self.th_p_mult,
        }
    }

    pub fn merge_params(&self) -> MergeParams {
        MergeParams {
            theta_deg: self.theta_deg,
            min_plane_points: self.min_plane_points,
            plane_scale_mult: self.plane_scale_mult,
        }
    }

    pub fn line_params(&self) -> LineParams {
        LineParams {
            min_contour_px: self.min_contour_px,
            split_tol_px: self.split_tol_px,
            min_run_px: self.min_run_px,
            raster_cap: self.raster_cap,
        }
    }

    pub fn post_params(&self) -> PostParams {
        PostParams {
            cluster_join_deg: self.cluster_join_deg,
            cluster_new_deg: self.cluster_new_deg,
            plane_reject_ratio: self.plane_reject_ratio,
            latitude_bin_deg: self.latitude_bin_deg,
            merge_dist_ratio: self.merge_dist_ratio,
            merge_perp_mult: self.merge_perp_mult,
            merge_gap_mult: self.merge_gap_mult,
        }
    }
}
