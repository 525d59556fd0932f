//! PLY meshes. Writes binary little-endian with `uchar` vertex colors;
//! reads ASCII and binary files with any scalar property types.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::read_exact_at;
use crate::error::{Error, Result};
use crate::field::{PointCloud, TexturedMesh};

const MAX_HEADER_BYTES: usize = 64 * 1024;
/// Upper bound on speculative pre-allocation from header counts.
const MAX_PREALLOC: usize = 1 << 16;

fn quantize(c: f32) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn write_header(
    w: &mut impl Write,
    vertices: usize,
    colors: bool,
    faces: Option<usize>,
) -> Result<()> {
    let mut h = String::from("ply\nformat binary_little_endian 1.0\ncomment voxmerge\n");
    h += &format!(
        "element vertex {vertices}\nproperty float x\nproperty float y\nproperty float z\n"
    );
    if colors {
        h += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    }
    if let Some(f) = faces {
        h += &format!("element face {f}\nproperty list uchar int vertex_indices\n");
    }
    h += "end_header\n";
    w.write_all(h.as_bytes())?;
    Ok(())
}

fn write_vertices(
    w: &mut impl Write,
    positions: &[[f32; 3]],
    colors: Option<&[[f32; 3]]>,
) -> Result<()> {
    let mut buf = Vec::with_capacity(15);
    for (i, p) in positions.iter().enumerate() {
        buf.clear();
        for c in p {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        if let Some(colors) = colors {
            buf.extend(colors[i].map(quantize));
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Colors are stored as 8-bit; values of the form `k / 255` survive a
/// write/read cycle exactly.
pub fn write_mesh_ply_to(mesh: &TexturedMesh, w: &mut impl Write) -> Result<()> {
    mesh.validate()?;
    if mesh.positions.len() > i32::MAX as usize {
        return Err(Error::Dimension("too many vertices for int indices".into()));
    }
    write_header(
        w,
        mesh.positions.len(),
        mesh.colors.is_some(),
        Some(mesh.triangles.len()),
    )?;
    write_vertices(w, &mesh.positions, mesh.colors.as_deref())?;
    let mut buf = [0u8; 13];
    buf[0] = 3;
    for t in &mesh.triangles {
        for (k, i) in t.iter().enumerate() {
            buf[1 + 4 * k..5 + 4 * k].copy_from_slice(&(*i as i32).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn write_mesh_ply(mesh: &TexturedMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mesh_ply_to(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Vertex-only PLY.
pub fn write_points_ply(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, cloud.positions.len(), cloud.colors.is_some(), None)?;
    write_vertices(&mut w, &cloud.positions, cloud.colors.as_deref())?;
    w.flush()?;
    Ok(())
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
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
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

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Scalar(Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Debug)]
struct Property {
    name: String,
    kind: Kind,
}

#[derive(Debug)]
struct Element {
    name: String,
    count: u64,
    props: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
    BinaryBe,
}

struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    len: u64,
}

fn parse_header(r: &mut impl BufRead) -> Result<Header> {
    let mut offset = 0u64;
    let mut line = Vec::new();
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut first = true;
    loop {
        line.clear();
        let n = r
            .by_ref()
            .take((MAX_HEADER_BYTES as u64).saturating_sub(offset))
            .read_until(b'\n', &mut line)?;
        if n == 0 || line.last() != Some(&b'\n') {
            return Err(Error::format(offset + n as u64, "unterminated PLY header"));
        }
        let start = offset;
        offset += n as u64;
        let text = std::str::from_utf8(&line)
            .map_err(|_| Error::format(start, "PLY header is not ASCII"))?
            .trim_end();
        let words: Vec<&str> = text.split_whitespace().collect();
        if first {
            if text != "ply" {
                return Err(Error::format(0, "missing \"ply\" magic line"));
            }
            first = false;
            continue;
        }
        let bad = |msg: String| Error::format(start, msg);
        match words.as_slice() {
            ["format", f, version] => {
                if *version != "1.0" {
                    return Err(bad(format!("unsupported PLY version {version}")));
                }
                encoding = Some(match *f {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLe,
                    "binary_big_endian" => Encoding::BinaryBe,
                    other => return Err(bad(format!("unknown PLY format {other}"))),
                });
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| bad(format!("bad element count {count:?}")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            ["property", "list", count, item, name] => {
                let (Some(count), Some(item)) = (Scalar::parse(count), Scalar::parse(item)) else {
                    return Err(bad(format!("bad list property types in {text:?}")));
                };
                if matches!(count, Scalar::F32 | Scalar::F64) {
                    return Err(bad("list counts must be integers".into()));
                }
                let el = elements
                    .last_mut()
                    .ok_or_else(|| bad("property before element".into()))?;
                el.props.push(Property {
                    name: name.to_string(),
                    kind: Kind::List { count, item },
                });
            }
            ["property", ty, name] => {
                let ty =
                    Scalar::parse(ty).ok_or_else(|| bad(format!("unknown property type {ty}")))?;
                let el = elements
                    .last_mut()
                    .ok_or_else(|| bad("property before element".into()))?;
                el.props.push(Property {
                    name: name.to_string(),
                    kind: Kind::Scalar(ty),
                });
            }
            ["end_header"] => break,
            _ => return Err(bad(format!("unrecognized header line {text:?}"))),
        }
    }
    let encoding = encoding.ok_or_else(|| Error::format(0, "PLY header has no format line"))?;
    Ok(Header {
        encoding,
        elements,
        len: offset,
    })
}

/// Pulls typed values out of the body.
trait Values {
    fn next(&mut self, s: Scalar) -> Result<f64>;
}

struct Binary<R> {
    r: R,
    offset: u64,
    big_endian: bool,
}

impl<R: Read> Values for Binary<R> {
    fn next(&mut self, s: Scalar) -> Result<f64> {
        let mut b = [0u8; 8];
        let n = s.size();
        read_exact_at(&mut self.r, &mut b[..n], self.offset, "PLY body")?;
        self.offset += n as u64;
        if self.big_endian {
            b[..n].reverse();
        }
        Ok(match s {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b),
        })
    }
}

struct Ascii<R> {
    r: R,
    offset: u64,
    line: String,
    pos: usize,
}

impl<R: BufRead> Values for Ascii<R> {
    fn next(&mut self, s: Scalar) -> Result<f64> {
        loop {
            let rest = &self.line[self.pos..];
            let trimmed = rest.trim_start();
            if !trimmed.is_empty() {
                let skip = rest.len() - trimmed.len();
                let len = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
                let token = &trimmed[..len];
                self.pos += skip + len;
                let at = self.offset;
                let v: f64 = token
                    .parse()
                    .map_err(|_| Error::format(at, format!("bad number {token:?}")))?;
                if !matches!(s, Scalar::F32 | Scalar::F64) && v.fract() != 0.0 {
                    return Err(Error::format(
                        at,
                        format!("expected an integer, got {token}"),
                    ));
                }
                return Ok(v);
            }
            self.offset += self.line.len() as u64;
            self.line.clear();
            self.pos = 0;
            if self.r.read_line(&mut self.line)? == 0 {
                return Err(Error::format(self.offset, "PLY body ends early"));
            }
        }
    }
}

fn position_of(props: &[Property], names: &[&str]) -> Option<usize> {
    props.iter().position(|p| names.contains(&p.name.as_str()))
}

fn read_body(header: &Header, values: &mut dyn Values) -> Result<TexturedMesh> {
    let mut mesh = TexturedMesh::default();
    let mut saw_vertices = false;
    for el in &header.elements {
        let mut row = vec![0.0f64; el.props.len()];
        let mut list = Vec::new();
        let mut lists: Vec<Vec<u32>> = Vec::new();
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        let xyz = ["x", "y", "z"].map(|n| position_of(&el.props, &[n]));
        let rgb = [
            ["red", "r", "diffuse_red"],
            ["green", "g", "diffuse_green"],
            ["blue", "b", "diffuse_blue"],
        ]
        .map(|n| position_of(&el.props, &n));
        let index_prop = position_of(&el.props, &["vertex_indices", "vertex_index"]);
        if is_vertex {
            if xyz.iter().any(Option::is_none) {
                return Err(Error::format(0, "vertex element lacks x, y or z"));
            }
            saw_vertices = true;
            let cap = (el.count as usize).min(MAX_PREALLOC);
            mesh.positions.reserve(cap);
            if rgb.iter().all(Option::is_some) {
                mesh.colors = Some(Vec::with_capacity(cap));
            }
        }
        for _ in 0..el.count {
            for (k, p) in el.props.iter().enumerate() {
                match p.kind {
                    Kind::Scalar(s) => row[k] = values.next(s)?,
                    Kind::List { count, item } => {
                        let n = values.next(count)?;
                        if n < 0.0 {
                            return Err(Error::format(0, "negative list length"));
                        }
                        list.clear();
                        for _ in 0..n as usize {
                            list.push(values.next(item)?);
                        }
                        if is_face && Some(k) == index_prop {
                            let idx = list
                                .iter()
                                .map(|v| {
                                    u32::try_from(*v as i64)
                                        .map_err(|_| Error::Data(format!("bad vertex index {v}")))
                                })
                                .collect::<Result<Vec<u32>>>()?;
                            lists.push(idx);
                        }
                    }
                }
            }
            if is_vertex {
                let [x, y, z] = xyz.map(|i| row[i.expect("checked above")] as f32);
                mesh.positions.push([x, y, z]);
                if let Some(colors) = mesh.colors.as_mut() {
                    let c = [0, 1, 2].map(|k| {
                        let i = rgb[k].expect("checked above");
                        let v = row[i];
                        match el.props[i].kind {
                            Kind::Scalar(Scalar::F32 | Scalar::F64) => v as f32,
                            Kind::Scalar(Scalar::U16) => v as f32 / 65535.0,
                            _ => v as f32 / 255.0,
                        }
                    });
                    colors.push(c);
                }
            }
            if is_face {
                if let Some(poly) = lists.pop() {
                    if poly.len() < 3 {
                        return Err(Error::Data(format!("face with {} vertices", poly.len())));
                    }
                    for i in 1..poly.len() - 1 {
                        mesh.triangles.push([poly[0], poly[i], poly[i + 1]]);
                    }
                }
            }
        }
    }
    if !saw_vertices {
        return Err(Error::format(0, "PLY file has no vertex element"));
    }
    mesh.validate()?;
    Ok(mesh)
}

/// Reads a PLY stream. Polygons are fan-triangulated; a file without faces
/// yields a mesh with vertices only.
pub fn read_ply_from(r: &mut impl BufRead) -> Result<TexturedMesh> {
    let header = parse_header(r)?;
    let mesh = match header.encoding {
        Encoding::Ascii => read_body(
            &header,
            &mut Ascii {
                r: &mut *r,
                offset: header.len,
                line: String::new(),
                pos: 0,
            },
        )?,
        enc => {
            let mut values = Binary {
                r: &mut *r,
                offset: header.len,
                big_endian: enc == Encoding::BinaryBe,
            };
            let mesh = read_body(&header, &mut values)?;
            super::expect_eof(&mut values.r, values.offset)?;
            mesh
        }
    };
    Ok(mesh)
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<TexturedMesh> {
    read_ply_from(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn triangle() -> TexturedMesh {
        TexturedMesh {
            positions: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, -0.5]],
            colors: Some(vec![
                [0.0, 1.0, 0.0],
                [1.0, 0.0, 0.0],
                [51.0 / 255.0, 1.0, 0.0],
            ]),
            triangles: vec![[0, 1, 2]],
        }
    }

    #[test]
    fn binary_layout_by_hand() {
        let mut bytes = Vec::new();
        write_mesh_ply_to(&triangle(), &mut bytes).unwrap();
        let header_end = bytes
            .windows(11)
            .position(|w| w == b"end_header\n")
            .unwrap()
            + 11;
        // 3 vertices of 3 floats + 3 bytes, one face of 1 + 3 ints.
        assert_eq!(bytes.len() - header_end, 3 * 15 + 13);
        assert_eq!(&bytes[header_end + 12..header_end + 15], &[0, 255, 0]);
        assert_eq!(bytes[header_end + 45], 3);
    }

    #[test]
    fn roundtrip() {
        let mut bytes = Vec::new();
        write_mesh_ply_to(&triangle(), &mut bytes).unwrap();
        assert_eq!(read_ply_from(&mut Cursor::new(bytes)).unwrap(), triangle());
        let mut plain = triangle();
        plain.colors = None;
        let mut bytes = Vec::new();
        write_mesh_ply_to(&plain, &mut bytes).unwrap();
        assert!(!String::from_utf8_lossy(&bytes).contains("red"));
        assert_eq!(read_ply_from(&mut Cursor::new(bytes)).unwrap(), plain);
    }

    #[test]
    fn ascii_quad_with_extra_properties() {
        let text = "ply\nformat ascii 1.0\ncomment hand written\n\
            element vertex 4\nproperty double x\nproperty double y\nproperty double z\nproperty float nx\n\
            element face 1\nproperty list uchar uint vertex_index\nproperty uchar flags\n\
            end_header\n0 0 0 9\n1 0 0 9\n1 1 0 9\n0 1 0 9\n4 0 1 2 3 7\n";
        let m = read_ply_from(&mut Cursor::new(text)).unwrap();
        assert_eq!(m.positions.len(), 4);
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
        assert!(m.colors.is_none());
    }

    #[test]
    fn big_endian_body() {
        let mut bytes = b"ply\nformat binary_big_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n".to_vec();
        for v in [1.0f32, -2.0, 0.5] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let m = read_ply_from(&mut Cursor::new(bytes)).unwrap();
        assert_eq!(m.positions, vec![[1.0, -2.0, 0.5]]);
    }

    #[test]
    fn malformed_inputs() {
        let cases: [&[u8]; 5] = [
            b"plx\n",
            b"ply\nformat binary_little_endian 1.0\nelement vertex 4000000000\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
            b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n0\n",
            b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n3 0 0 5\n",
            b"ply\nformat ascii 1.0\n",
        ];
        for c in cases {
            assert!(
                read_ply_from(&mut Cursor::new(c)).is_err(),
                "{}",
                String::from_utf8_lossy(c)
            );
        }
    }
}
