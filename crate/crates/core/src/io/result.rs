use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::pipeline::DetectionResult;
use crate::scene::GroundTruth;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultFormat {
    Json,
    Obj,
    Csv,
}

impl FromStr for ResultFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ResultFormat::Json),
            "obj" => Ok(ResultFormat::Obj),
            "csv" => Ok(ResultFormat::Csv),
            other => Err(Error::InvalidParameter(format!("unknown result format `{other}`"))),
        }
    }
}

pub fn write_result(result: &DetectionResult, out: &mut impl Write, format: ResultFormat) -> Result<()> {
    let io = |e| Error::io("<output>", e);
    match format {
        ResultFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, result)?;
            writeln!(out).map_err(io)?;
        }
        ResultFormat::Obj => {
            for s in &result.segments {
                writeln!(out, "v {} {} {}", s.a[0], s.a[1], s.a[2]).map_err(io)?;
                writeln!(out, "v {} {} {}", s.b[0], s.b[1], s.b[2]).map_err(io)?;
            }
            for i in 0..result.segments.len() {
                writeln!(out, "l {} {}", 2 * i + 1, 2 * i + 2).map_err(io)?;
            }
        }
        ResultFormat::Csv => {
            writeln!(out, "x1,y1,z1,x2,y2,z2,plane_id,length").map_err(io)?;
            for s in &result.segments {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    s.a[0], s.a[1], s.a[2], s.b[0], s.b[1], s.b[2], s.plane_id, s.length
                )
                .map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

pub fn save_result(result: &DetectionResult, path: &Path, format: ResultFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_result(result, &mut BufWriter::new(file), format).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn load_result(path: &Path) -> Result<DetectionResult> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads `{"edges": [{"a": [x, y, z], "b": [x, y, z]}, ...]}`.
pub fn load_truth(path: &Path) -> Result<GroundTruth> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes `x y z label` rows; unassigned points get label -1.
pub fn write_labels(cloud: &PointCloud, labels: &[u32], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        for (p, &l) in cloud.points.iter().zip(labels) {
            let label = if l == u32::MAX { -1 } else { l as i64 };
            writeln!(out, "{} {} {} {label}", p.x, p.y, p.z)?;
        }
        out.flush()
    })()
    .map_err(|e| Error::io(path, e))
}
