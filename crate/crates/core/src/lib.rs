//! Detection of 3D line segments in unorganized point clouds.
//!
//! The cloud is segmented into planes by region growing and region merging,
//! each plane is rasterized to a binary image whose contours are split and
//! fitted with 2D segments, and the re-projected 3D segments are cleaned by
//! structure-aware outlier removal and merging.

pub mod config;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod line2d;
pub mod pipeline;
pub mod postprocess;
pub mod raster;
pub mod scene;
pub mod segmentation;

pub use error::{Error, Result};
