use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};

use super::ply::read_ply;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Auto,
    Xyz,
    Pts,
    Ply,
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(CloudFormat::Auto),
            "xyz" | "txt" => Ok(CloudFormat::Xyz),
            "pts" => Ok(CloudFormat::Pts),
            "ply" => Ok(CloudFormat::Ply),
            other => Err(Error::InvalidParameter(format!("unknown cloud format `{other}`"))),
        }
    }
}

impl CloudFormat {
    fn resolve(self, path: &Path) -> CloudFormat {
        if self != CloudFormat::Auto {
            return self;
        }
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("ply") => CloudFormat::Ply,
            Some("pts") => CloudFormat::Pts,
            _ => CloudFormat::Xyz,
        }
    }
}

pub fn load_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let cloud = match format.resolve(path) {
        CloudFormat::Ply => read_ply(BufReader::new(file), path)?,
        f => read_text(BufReader::new(file), path, f == CloudFormat::Pts)?,
    };
    log::debug!("{}: {} points", path.display(), cloud.len());
    Ok(cloud)
}

/// Whitespace-separated rows `x y z [extra...]`. Blank lines and `#`
/// comments are skipped; with `pts`, a leading single-integer row is taken
/// as the point count.
fn read_text(reader: impl BufRead, path: &Path, pts: bool) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut extras = Vec::new();
    let mut any_extra = false;
    let mut first_row = true;
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let row = line.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        if std::mem::take(&mut first_row) && pts && row.parse::<u64>().is_ok() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        let mut rest = row;
        let mut xyz = [0.0; 3];
        for (i, c) in xyz.iter_mut().enumerate() {
            let tok_end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            let tok = &rest[..tok_end];
            if tok.is_empty() {
                return Err(parse_err(format!("expected 3 coordinates, found {i}")));
            }
            *c = tok
                .parse()
                .map_err(|_| parse_err(format!("invalid coordinate `{tok}`")))?;
            rest = rest[tok_end..].trim_start();
        }
        any_extra |= !rest.is_empty();
        extras.push(rest.to_string());
        points.push(Vec3::from(xyz));
    }
    let mut cloud = PointCloud::new(points);
    if any_extra {
        cloud.extras = Some(extras);
    }
    Ok(cloud)
}

/// Writes `x y z [extra]` rows with round-trip precision.
pub fn write_xyz(cloud: &PointCloud, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        for (i, p) in cloud.points.iter().enumerate() {
            write!(out, "{} {} {}", p.x, p.y, p.z)?;
            match cloud.extras.as_ref().map(|e| e[i].as_str()) {
                Some(extra) if !extra.is_empty() => writeln!(out, " {extra}")?,
                _ => writeln!(out)?,
            }
        }
        out.flush()
    })()
    .map_err(|e| Error::io(path, e))
}
