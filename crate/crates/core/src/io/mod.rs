//! Point-cloud readers and writers, result serialization.

mod cloud;
mod ply;
mod result;

pub use cloud::{load_cloud, write_xyz, CloudFormat};
pub use ply::{read_ply, write_ply, PlyEncoding, PlyScalar};
pub use result::{load_result, load_truth, save_result, write_labels, write_result, ResultFormat};
