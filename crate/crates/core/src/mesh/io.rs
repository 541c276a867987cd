//! OFF, OBJ and PLY reading and writing.
//!
//! Only positions and triangle connectivity are kept. Writers are
//! deterministic: text formats print coordinates with the shortest decimal
//! representation that round-trips to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use super::{Point3, TriMesh};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
    /// ASCII PLY on write; both ASCII and binary little endian on read.
    Ply,
    PlyBinary,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).unwrap_or_default();
        match ext.as_str() {
            "off" => Ok(MeshFormat::Off),
            "obj" => Ok(MeshFormat::Obj),
            "ply" => Ok(MeshFormat::Ply),
            _ => Err(Error::InvalidInput(format!("cannot infer mesh format from {}", path.display()))),
        }
    }
}

/// Reads a mesh; isolated vertices are dropped with a warning.
pub fn load_mesh(path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<TriMesh> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => MeshFormat::from_path(path)?,
    };
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mesh = parse_mesh(&bytes, format)?;
    let (clean, map) = mesh.drop_isolated();
    let dropped = map.iter().filter(|m| m.is_none()).count();
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} isolated vertices", path.display());
    }
    Ok(clean)
}

pub fn parse_mesh(bytes: &[u8], format: MeshFormat) -> Result<TriMesh> {
    let (v, t) = match format {
        MeshFormat::Off => parse_off(&as_text(bytes)?)?,
        MeshFormat::Obj => parse_obj(&as_text(bytes)?)?,
        MeshFormat::Ply | MeshFormat::PlyBinary => parse_ply(bytes)?,
    };
    TriMesh::new(v, t)
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<()> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => MeshFormat::from_path(path)?,
    };
    let bytes = write_mesh(mesh, format);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_mesh(mesh: &TriMesh, format: MeshFormat) -> Vec<u8> {
    match format {
        MeshFormat::Off => write_off(mesh).into_bytes(),
        MeshFormat::Obj => write_obj(mesh).into_bytes(),
        MeshFormat::Ply => write_ply_ascii(mesh).into_bytes(),
        MeshFormat::PlyBinary => write_ply_binary(mesh),
    }
}

fn as_text(bytes: &[u8]) -> Result<std::borrow::Cow<'_, str>> {
    std::str::from_utf8(bytes)
        .map(std::borrow::Cow::Borrowed)
        .map_err(|_| Error::Parse("input is not valid UTF-8".into()))
}

type Parsed = (Vec<Point3>, Vec<[usize; 3]>);

// never trust a header count for preallocation
const PREALLOC_CAP: usize = 1 << 20;

fn parse_f64(tok: Option<&str>, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?;
    let v: f64 = tok.parse().map_err(|_| Error::Parse(format!("bad {what} '{tok}'")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite {what}")));
    }
    Ok(v)
}

fn parse_usize(tok: Option<&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?;
    tok.parse().map_err(|_| Error::Parse(format!("bad {what} '{tok}'")))
}

pub fn parse_off(text: &str) -> Result<Parsed> {
    let mut lines = text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty OFF file".into()))?;
    let rest = header.strip_prefix("OFF").ok_or_else(|| Error::Parse("missing OFF header".into()))?.trim();
    let counts_line =
        if rest.is_empty() { lines.next().ok_or_else(|| Error::Parse("missing OFF counts".into()))? } else { rest };
    let mut it = counts_line.split_whitespace();
    let nv = parse_usize(it.next(), "vertex count")?;
    let nf = parse_usize(it.next(), "face count")?;
    let mut verts = Vec::with_capacity(nv.min(PREALLOC_CAP));
    for i in 0..nv {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("OFF ended at vertex {i} of {nv}")))?;
        let mut it = line.split_whitespace();
        verts.push([parse_f64(it.next(), "x")?, parse_f64(it.next(), "y")?, parse_f64(it.next(), "z")?]);
    }
    let mut tris = Vec::with_capacity(nf.min(PREALLOC_CAP));
    for i in 0..nf {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("OFF ended at face {i} of {nf}")))?;
        let mut it = line.split_whitespace();
        let k = parse_usize(it.next(), "face size")?;
        if k != 3 {
            return Err(Error::NonTriangularFace(k));
        }
        tris.push([
            parse_usize(it.next(), "face index")?,
            parse_usize(it.next(), "face index")?,
            parse_usize(it.next(), "face index")?,
        ]);
    }
    Ok((verts, tris))
}

pub fn parse_obj(text: &str) -> Result<Parsed> {
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                verts.push([parse_f64(it.next(), "x")?, parse_f64(it.next(), "y")?, parse_f64(it.next(), "z")?]);
            }
            Some("f") => {
                let corners: Vec<&str> = it.collect();
                if corners.len() != 3 {
                    return Err(Error::NonTriangularFace(corners.len()));
                }
                let mut tri = [0usize; 3];
                for (slot, c) in tri.iter_mut().zip(&corners) {
                    let head = c.split('/').next().unwrap_or("");
                    let idx: i64 =
                        head.parse().map_err(|_| Error::Parse(format!("line {}: bad face index '{c}'", lineno + 1)))?;
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        verts.len() as i64 + idx
                    } else {
                        -1
                    };
                    if resolved < 0 {
                        return Err(Error::Parse(format!("line {}: face index {idx} out of range", lineno + 1)));
                    }
                    *slot = resolved as usize;
                }
                tris.push(tri);
            }
            _ => {}
        }
    }
    Ok((verts, tris))
}

#[derive(Clone, Copy, Debug, PartialEq)]
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
    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return Err(Error::Parse(format!("unknown PLY type '{name}'"))),
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

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(PartialEq)]
enum PlyEncoding {
    Ascii,
    BinaryLe,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| Error::Parse("PLY body truncated".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn scalar(&mut self, t: Scalar) -> Result<f64> {
        Ok(t.read_le(self.take(t.size())?))
    }
}

fn to_index(x: f64) -> Result<usize> {
    if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
        return Err(Error::Parse(format!("bad PLY face index {x}")));
    }
    Ok(x as usize)
}

pub fn parse_ply(bytes: &[u8]) -> Result<Parsed> {
    let marker = b"end_header";
    let hpos = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| Error::Parse("PLY header has no end_header".into()))?;
    let mut body_start = hpos + marker.len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }
    let header = std::str::from_utf8(&bytes[..hpos]).map_err(|_| Error::Parse("PLY header is not UTF-8".into()))?;
    let mut lines = header.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(Error::Parse("missing 'ply' magic".into()));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("format") => {
                encoding = Some(match it.next() {
                    Some("ascii") => PlyEncoding::Ascii,
                    Some("binary_little_endian") => PlyEncoding::BinaryLe,
                    other => return Err(Error::Parse(format!("unsupported PLY format {other:?}"))),
                });
            }
            Some("element") => {
                let name = it.next().unwrap_or("").to_string();
                let count = parse_usize(it.next(), "element count")?;
                elements.push(Element { name, count, props: Vec::new() });
            }
            Some("property") => {
                let el = elements.last_mut().ok_or_else(|| Error::Parse("property before element".into()))?;
                match it.next() {
                    Some("list") => {
                        let ct = Scalar::parse(it.next().unwrap_or(""))?;
                        let it_t = Scalar::parse(it.next().unwrap_or(""))?;
                        el.props.push(Property::List(it.next().unwrap_or("").into(), ct, it_t));
                    }
                    Some(t) => {
                        let t = Scalar::parse(t)?;
                        el.props.push(Property::Scalar(it.next().unwrap_or("").into(), t));
                    }
                    None => return Err(Error::Parse("empty property line".into())),
                }
            }
            _ => {}
        }
    }
    let encoding = encoding.ok_or_else(|| Error::Parse("PLY header lacks format".into()))?;
    let body = &bytes[body_start..];
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    let mut ascii_tokens = if encoding == PlyEncoding::Ascii {
        Some(
            std::str::from_utf8(body)
                .map_err(|_| Error::Parse("PLY ascii body is not UTF-8".into()))?
                .split_whitespace(),
        )
    } else {
        None
    };
    let mut cursor = Cursor { data: body, pos: 0 };

    for el in &elements {
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        let xyz: Vec<Option<usize>> = el
            .props
            .iter()
            .map(|p| match p {
                Property::Scalar(n, _) => ["x", "y", "z"].iter().position(|c| c == n),
                _ => None,
            })
            .collect();
        if is_vertex {
            for axis in 0..3 {
                if !xyz.contains(&Some(axis)) {
                    return Err(Error::Parse("PLY vertex element lacks x/y/z".into()));
                }
            }
            verts.reserve(el.count.min(PREALLOC_CAP));
        }
        if is_face {
            tris.reserve(el.count.min(PREALLOC_CAP));
        }
        for _ in 0..el.count {
            let mut p = [0.0; 3];
            for (pi, prop) in el.props.iter().enumerate() {
                match prop {
                    Property::Scalar(_, t) => {
                        let v = match ascii_tokens.as_mut() {
                            Some(tok) => parse_f64(tok.next(), "PLY value")?,
                            None => cursor.scalar(*t)?,
                        };
                        if let Some(axis) = xyz[pi] {
                            if !v.is_finite() {
                                return Err(Error::Parse("non-finite PLY coordinate".into()));
                            }
                            p[axis] = v;
                        }
                    }
                    Property::List(name, ct, it_t) => {
                        let n = match ascii_tokens.as_mut() {
                            Some(tok) => parse_f64(tok.next(), "PLY list size")?,
                            None => cursor.scalar(*ct)?,
                        };
                        let n = to_index(n)?;
                        let wanted = is_face && (name == "vertex_indices" || name == "vertex_index");
                        if wanted && n != 3 {
                            return Err(Error::NonTriangularFace(n));
                        }
                        let mut tri = [0usize; 3];
                        for k in 0..n {
                            let v = match ascii_tokens.as_mut() {
                                Some(tok) => parse_f64(tok.next(), "PLY list item")?,
                                None => cursor.scalar(*it_t)?,
                            };
                            if wanted {
                                tri[k] = to_index(v)?;
                            }
                        }
                        if wanted {
                            tris.push(tri);
                        }
                    }
                }
            }
            if is_vertex {
                verts.push(p);
            }
        }
    }
    Ok((verts, tris))
}

pub fn write_off(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", mesh.num_vertices(), mesh.num_triangles());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    for [a, b, c] in mesh.triangles() {
        let _ = writeln!(s, "3 {a} {b} {c}");
    }
    s
}

pub fn write_obj(mesh: &TriMesh) -> String {
    let mut s = String::new();
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    for [a, b, c] in mesh.triangles() {
        let _ = writeln!(s, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    s
}

fn ply_header(mesh: &TriMesh, format: &str) -> String {
    format!(
        "ply\nformat {format} 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.num_vertices(),
        mesh.num_triangles()
    )
}

pub fn write_ply_ascii(mesh: &TriMesh) -> String {
    let mut s = ply_header(mesh, "ascii");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    for [a, b, c] in mesh.triangles() {
        let _ = writeln!(s, "3 {a} {b} {c}");
    }
    s
}

pub fn write_ply_binary(mesh: &TriMesh) -> Vec<u8> {
    let mut out = ply_header(mesh, "binary_little_endian").into_bytes();
    out.reserve(mesh.num_vertices() * 24 + mesh.num_triangles() * 13);
    for p in mesh.vertices() {
        for c in p {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for tri in mesh.triangles() {
        out.push(3);
        for v in tri {
            out.extend_from_slice(&(v as i32).to_le_bytes());
        }
    }
    out
}
