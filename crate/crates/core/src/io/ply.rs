use std::fs::File;
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

/// Coordinate type written by [`write_ply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyScalar {
    Float,
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn read_le(self, r: &mut impl Read) -> std::io::Result<f64> {
        let mut b = [0u8; 8];
        Ok(match self {
            Scalar::I8 => {
                r.read_exact(&mut b[..1])?;
                b[0] as i8 as f64
            }
            Scalar::U8 => {
                r.read_exact(&mut b[..1])?;
                b[0] as f64
            }
            Scalar::I16 => {
                r.read_exact(&mut b[..2])?;
                i16::from_le_bytes([b[0], b[1]]) as f64
            }
            Scalar::U16 => {
                r.read_exact(&mut b[..2])?;
                u16::from_le_bytes([b[0], b[1]]) as f64
            }
            Scalar::I32 => {
                r.read_exact(&mut b[..4])?;
                i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64
            }
            Scalar::U32 => {
                r.read_exact(&mut b[..4])?;
                u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64
            }
            Scalar::F32 => {
                r.read_exact(&mut b[..4])?;
                f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64
            }
            Scalar::F64 => {
                r.read_exact(&mut b)?;
                f64::from_le_bytes(b)
            }
        })
    }
}

#[derive(Debug)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar(n, _) | Property::List(n, _, _) => n,
        }
    }
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    lines: usize,
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn unsupported(path: &Path, property: &str, reason: impl Into<String>) -> Error {
    Error::UnsupportedProperty {
        path: path.to_path_buf(),
        property: property.to_string(),
        reason: reason.into(),
    }
}

fn read_header(reader: &mut impl BufRead, path: &Path) -> Result<Header> {
    let mut lines = 0;
    let mut next_line = |reader: &mut dyn BufRead| -> Result<String> {
        let mut buf = Vec::new();
        let n = reader.read_until(b'\n', &mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(format_err(path, "unexpected end of file in PLY header"));
        }
        lines += 1;
        String::from_utf8(buf)
            .map(|s| s.trim_end().to_string())
            .map_err(|_| format_err(path, "PLY header is not text"))
    };
    if next_line(reader)? != "ply" {
        return Err(format_err(path, "missing `ply` magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line(reader)?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", "ascii", _] => encoding = Some(PlyEncoding::Ascii),
            ["format", "binary_little_endian", _] => encoding = Some(PlyEncoding::BinaryLittleEndian),
            ["format", other, ..] => {
                return Err(format_err(path, format!("unsupported PLY encoding `{other}`")))
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| format_err(path, format!("invalid element count `{count}`")))?,
                properties: Vec::new(),
            }),
            ["property", "list", count_ty, item_ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| format_err(path, "property before any element"))?;
                let (Some(c), Some(i)) = (Scalar::parse(count_ty), Scalar::parse(item_ty)) else {
                    return Err(unsupported(path, name, format!("unknown list type `{count_ty} {item_ty}`")));
                };
                el.properties.push(Property::List(name.to_string(), c, i));
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| format_err(path, "property before any element"))?;
                let s = Scalar::parse(ty)
                    .ok_or_else(|| unsupported(path, name, format!("unknown type `{ty}`")))?;
                el.properties.push(Property::Scalar(name.to_string(), s));
            }
            _ => return Err(format_err(path, format!("malformed header line `{line}`"))),
        }
    }
    let encoding = encoding.ok_or_else(|| format_err(path, "missing PLY format line"))?;
    Ok(Header {
        encoding,
        elements,
        lines,
    })
}

/// Slots of the vertex properties we keep: x, y, z, red, green, blue.
fn vertex_slots(el: &Element, path: &Path) -> Result<[Option<usize>; 6]> {
    let mut slots = [None; 6];
    for (i, p) in el.properties.iter().enumerate() {
        let slot = match p.name() {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            "red" => 3,
            "green" => 4,
            "blue" => 5,
            _ => continue,
        };
        match p {
            Property::Scalar(_, Scalar::F32 | Scalar::F64) if slot < 3 => {}
            Property::Scalar(_, _) if slot >= 3 => {}
            Property::Scalar(name, ty) => {
                return Err(unsupported(path, name, format!("coordinates must be float or double, found {ty:?}")))
            }
            Property::List(name, ..) => return Err(unsupported(path, name, "list-valued vertex attribute")),
        }
        slots[slot] = Some(i);
    }
    for (slot, axis) in ["x", "y", "z"].iter().enumerate() {
        if slots[slot].is_none() {
            return Err(unsupported(path, axis, "missing vertex coordinate"));
        }
    }
    Ok(slots)
}

struct VertexSink {
    slots: [Option<usize>; 6],
    has_color: bool,
    points: Vec<Vec3>,
    colors: Vec<[u8; 3]>,
}

impl VertexSink {
    fn push(&mut self, values: &[f64]) {
        let get = |s: usize| self.slots[s].map_or(0.0, |i| values[i]);
        self.points.push(Vec3::new(get(0), get(1), get(2)));
        if self.has_color {
            self.colors
                .push([3, 4, 5].map(|s| get(s).round().clamp(0.0, 255.0) as u8));
        }
    }
}

pub fn read_ply(mut reader: impl BufRead, path: &Path) -> Result<PointCloud> {
    let header = read_header(&mut reader, path)?;
    let vertex_idx = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| format_err(path, "no vertex element"))?;
    let slots = vertex_slots(&header.elements[vertex_idx], path)?;
    let vcount = header.elements[vertex_idx].count;
    let mut sink = VertexSink {
        slots,
        has_color: slots[3..].iter().all(Option::is_some),
        points: Vec::with_capacity(vcount),
        colors: Vec::new(),
    };

    match header.encoding {
        PlyEncoding::BinaryLittleEndian => {
            let eof = |e: std::io::Error| format_err(path, format!("truncated binary payload: {e}"));
            let mut values = Vec::new();
            for (ei, el) in header.elements.iter().enumerate().take(vertex_idx + 1) {
                for _ in 0..el.count {
                    values.clear();
                    for p in &el.properties {
                        match p {
                            Property::Scalar(_, s) => values.push(s.read_le(&mut reader).map_err(eof)?),
                            Property::List(_, c, i) => {
                                let n = c.read_le(&mut reader).map_err(eof)? as usize;
                                for _ in 0..n {
                                    i.read_le(&mut reader).map_err(eof)?;
                                }
                                values.push(0.0);
                            }
                        }
                    }
                    if ei == vertex_idx {
                        sink.push(&values);
                    }
                }
            }
        }
        PlyEncoding::Ascii => {
            let mut text = String::new();
            reader
                .read_to_string(&mut text)
                .map_err(|e| Error::io(path, e))?;
            let mut lines = text
                .lines()
                .enumerate()
                .map(|(i, l)| (i + 1 + header.lines, l))
                .filter(|(_, l)| !l.trim().is_empty());
            let mut values = Vec::new();
            for (ei, el) in header.elements.iter().enumerate().take(vertex_idx + 1) {
                for _ in 0..el.count {
                    let (line_no, line) = lines
                        .next()
                        .ok_or_else(|| format_err(path, format!("expected {} `{}` rows", el.count, el.name)))?;
                    let err = |message: String| Error::Parse {
                        path: path.to_path_buf(),
                        line: line_no,
                        message,
                    };
                    if ei != vertex_idx {
                        continue;
                    }
                    values.clear();
                    for tok in line.split_whitespace() {
                        values.push(
                            tok.parse::<f64>()
                                .map_err(|_| err(format!("invalid value `{tok}`")))?,
                        );
                    }
                    if values.len() < el.properties.len() {
                        return Err(err(format!(
                            "expected {} values, found {}",
                            el.properties.len(),
                            values.len()
                        )));
                    }
                    sink.push(&values);
                }
            }
        }
    }
    let mut cloud = PointCloud::new(sink.points);
    if sink.has_color {
        cloud.colors = Some(sink.colors);
    }
    Ok(cloud)
}

fn write_ply_to(cloud: &PointCloud, out: &mut impl Write, encoding: PlyEncoding, scalar: PlyScalar) -> std::io::Result<()> {
    let (enc, ty) = (
        match encoding {
            PlyEncoding::Ascii => "ascii",
            PlyEncoding::BinaryLittleEndian => "binary_little_endian",
        },
        match scalar {
            PlyScalar::Float => "float",
            PlyScalar::Double => "double",
        },
    );
    writeln!(out, "ply\nformat {enc} 1.0\nelement vertex {}", cloud.len())?;
    for axis in ["x", "y", "z"] {
        writeln!(out, "property {ty} {axis}")?;
    }
    let colors = cloud.colors.as_deref();
    if colors.is_some() {
        writeln!(out, "property uchar red\nproperty uchar green\nproperty uchar blue")?;
    }
    writeln!(out, "end_header")?;
    for (i, p) in cloud.points.iter().enumerate() {
        match encoding {
            PlyEncoding::Ascii => {
                match scalar {
                    PlyScalar::Float => write!(out, "{} {} {}", p.x as f32, p.y as f32, p.z as f32)?,
                    PlyScalar::Double => write!(out, "{} {} {}", p.x, p.y, p.z)?,
                }
                if let Some(c) = colors {
                    write!(out, " {} {} {}", c[i][0], c[i][1], c[i][2])?;
                }
                writeln!(out)?;
            }
            PlyEncoding::BinaryLittleEndian => {
                for v in [p.x, p.y, p.z] {
                    match scalar {
                        PlyScalar::Float => out.write_all(&(v as f32).to_le_bytes())?,
                        PlyScalar::Double => out.write_all(&v.to_le_bytes())?,
                    }
                }
                if let Some(c) = colors {
                    out.write_all(&c[i])?;
                }
            }
        }
    }
    out.flush()
}

pub fn write_ply(cloud: &PointCloud, path: &Path, encoding: PlyEncoding, scalar: PlyScalar) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_ply_to(cloud, &mut BufWriter::new(file), encoding, scalar).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(bytes: &[u8]) -> Result<PointCloud> {
        read_ply(bytes, Path::new("t.ply"))
    }

    fn sample() -> PointCloud {
        let mut c = PointCloud::from_xyz(&[
            [0.0, 0.0, 0.0],
            [1.5, -2.25, 3.125],
            [1e-3, 12345.678, -0.1],
            [7.0, 8.0, 9.0],
            [0.1, 0.2, 0.3],
        ]);
        c.colors = Some(vec![[1, 2, 3], [255, 0, 10], [4, 5, 6], [7, 8, 9], [0, 0, 0]]);
        c
    }

    #[test]
    fn binary_matches_ascii_twin() {
        let c = sample();
        let mut ascii = Vec::new();
        let mut binary = Vec::new();
        write_ply_to(&c, &mut ascii, PlyEncoding::Ascii, PlyScalar::Double).unwrap();
        write_ply_to(&c, &mut binary, PlyEncoding::BinaryLittleEndian, PlyScalar::Double).unwrap();
        let (a, b) = (read(&ascii).unwrap(), read(&binary).unwrap());
        assert_eq!(a.len(), 5);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn float32_is_close() {
        let c = sample();
        let mut bytes = Vec::new();
        write_ply_to(&c, &mut bytes, PlyEncoding::BinaryLittleEndian, PlyScalar::Float).unwrap();
        let back = read(&bytes).unwrap();
        for (p, q) in c.points.iter().zip(&back.points) {
            assert!((p - q).norm() <= 1e-6 * p.norm().max(1e-30), "{p} {q}");
        }
    }

    #[test]
    fn skips_faces_and_unknown_properties() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\ncomment x\nelement vertex 2\n\
property float x\nproperty float y\nproperty float z\nproperty int flags\n\
property list uchar int extra\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
            .to_vec();
        for (i, v) in [[1.0f32, 2.0, 3.0], [4.0, 5.0, 6.0]].iter().enumerate() {
            for x in v {
                bytes.extend(x.to_le_bytes());
            }
            bytes.extend(7i32.to_le_bytes());
            bytes.push(i as u8);
            for _ in 0..i {
                bytes.extend(1i32.to_le_bytes());
            }
        }
        bytes.push(3);
        for j in 0..3i32 {
            bytes.extend(j.to_le_bytes());
        }
        let c = read(&bytes).unwrap();
        assert_eq!(c.points, vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 5.0, 6.0)]);
        assert!(c.colors.is_none());
    }

    #[test]
    fn errors_name_the_property() {
        let int_x = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty int x\nproperty float y\nproperty float z\nend_header\n1 2 3\n";
        match read(int_x) {
            Err(Error::UnsupportedProperty { property, .. }) => assert_eq!(property, "x"),
            other => panic!("{other:?}"),
        }
        let weird = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty half w\nend_header\n";
        match read(weird) {
            Err(Error::UnsupportedProperty { property, .. }) => assert_eq!(property, "w"),
            other => panic!("{other:?}"),
        }
        let big = b"ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(read(big), Err(Error::Format { .. })));
        let short = b"ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n4 5\n";
        match read(short) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 9),
            other => panic!("{other:?}"),
        }
        let truncated = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n\0\0\0\0";
        assert!(matches!(read(truncated), Err(Error::Format { .. })));
    }
}
