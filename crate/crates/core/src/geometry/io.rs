//! OBJ and PLY readers/writers.
//!
//! OBJ: `v x y z` and `f i j k ...` records (1-based, negative indices are
//! relative, polygons are fan-triangulated, `i/j/k` tokens use the first
//! field). PLY: ASCII, binary little-endian and binary big-endian; the
//! `vertex` element supplies `x y z` and optionally `nx ny nz`, the `face`
//! element supplies `vertex_indices` (or `vertex_index`).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::Surface;
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(MeshFormat::Obj),
            "ply" => Some(MeshFormat::Ply),
            _ => None,
        }
    }
}

/// Loads a surface, inferring the format from the file extension.
pub fn load(path: impl AsRef<Path>) -> Result<Surface> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path).ok_or_else(|| {
        Error::InvalidInput(format!(
            "{}: unknown mesh extension (expected .obj or .ply)",
            path.display()
        ))
    })?;
    load_surface(path, format)
}

pub fn load_surface(path: impl AsRef<Path>, format: MeshFormat) -> Result<Surface> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        MeshFormat::Obj => parse_obj(path, &bytes),
        MeshFormat::Ply => parse_ply(path, &bytes),
    }
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_obj(path: &Path, bytes: &[u8]) -> Result<Surface> {
    let text = std::str::from_utf8(bytes).map_err(|_| format_err(path, 0, "not UTF-8 text"))?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| format_err(path, line_no, "vertex needs 3 coordinates"))?;
                    *c = tok.parse().map_err(|_| {
                        format_err(path, line_no, format!("bad coordinate `{tok}`"))
                    })?;
                }
                vertices.push(Vec3::from(xyz));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in tokens {
                    let first = tok.split('/').next().unwrap_or("");
                    let idx: i64 = first.parse().map_err(|_| {
                        format_err(path, line_no, format!("bad face index `{tok}`"))
                    })?;
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        vertices.len() as i64 + idx
                    } else {
                        return Err(format_err(path, line_no, "face index 0 is invalid (OBJ is 1-based)"));
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(format_err(
                            path,
                            line_no,
                            format!("face index {idx} out of range"),
                        ));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(format_err(path, line_no, "face needs at least 3 vertices"));
                }
                for k in 1..poly.len() - 1 {
                    faces.push([poly[0], poly[k], poly[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if vertices.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no vertices", path.display())));
    }
    Surface::from_mesh(vertices, faces)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
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
    fn parse(name: &str) -> Option<Self> {
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

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, b: &[u8], little: bool) -> f64 {
        macro_rules! rd {
            ($t:ty, $n:expr) => {{
                let mut a = [0u8; $n];
                a.copy_from_slice(&b[..$n]);
                if little {
                    <$t>::from_le_bytes(a) as f64
                } else {
                    <$t>::from_be_bytes(a) as f64
                }
            }};
        }
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => rd!(i16, 2),
            Scalar::U16 => rd!(u16, 2),
            Scalar::I32 => rd!(i32, 4),
            Scalar::U32 => rd!(u32, 4),
            Scalar::F32 => rd!(f32, 4),
            Scalar::F64 => rd!(f64, 8),
        }
    }
}

#[derive(Clone, Debug)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
    header_line: usize,
}

/// One decoded element instance: scalar values and list values per property.
enum Value {
    Scalar(f64),
    List(Vec<f64>),
}

fn parse_ply(path: &Path, bytes: &[u8]) -> Result<Surface> {
    // Header is ASCII, terminated by `end_header` and a newline.
    let mut pos = 0;
    let mut line_no = 0;
    let next_line = |pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let end = bytes[*pos..]
            .iter()
            .position(|&c| c == b'\n')
            .map_or(bytes.len(), |k| *pos + k);
        let line = String::from_utf8_lossy(&bytes[*pos..end])
            .trim_end_matches('\r')
            .to_string();
        *pos = (end + 1).min(bytes.len());
        Some(line)
    };

    let magic = next_line(&mut pos);
    line_no += 1;
    if magic.as_deref().map(str::trim) != Some("ply") {
        return Err(format_err(path, 1, "missing `ply` magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line(&mut pos)
            .ok_or_else(|| format_err(path, line_no, "unterminated header"))?;
        line_no += 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first().copied() {
            Some("format") => {
                encoding = Some(match toks.get(1).copied() {
                    Some("ascii") => Encoding::Ascii,
                    Some("binary_little_endian") => Encoding::BinaryLe,
                    Some("binary_big_endian") => Encoding::BinaryBe,
                    other => {
                        return Err(format_err(
                            path,
                            line_no,
                            format!("unsupported format {other:?}"),
                        ))
                    }
                });
            }
            Some("element") => {
                if toks.len() != 3 {
                    return Err(format_err(path, line_no, "malformed element line"));
                }
                let count = toks[2]
                    .parse()
                    .map_err(|_| format_err(path, line_no, "bad element count"))?;
                elements.push(Element {
                    name: toks[1].to_string(),
                    count,
                    props: Vec::new(),
                    header_line: line_no,
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| format_err(path, line_no, "property before element"))?;
                let prop = if toks.get(1) == Some(&"list") {
                    if toks.len() != 5 {
                        return Err(format_err(path, line_no, "malformed list property"));
                    }
                    let count = Scalar::parse(toks[2]);
                    let item = Scalar::parse(toks[3]);
                    match (count, item) {
                        (Some(count), Some(item)) => Property::List {
                            name: toks[4].to_string(),
                            count,
                            item,
                        },
                        _ => return Err(format_err(path, line_no, "unknown list type")),
                    }
                } else {
                    if toks.len() != 3 {
                        return Err(format_err(path, line_no, "malformed property"));
                    }
                    let ty = Scalar::parse(toks[1])
                        .ok_or_else(|| format_err(path, line_no, "unknown property type"))?;
                    Property::Scalar {
                        name: toks[2].to_string(),
                        ty,
                    }
                };
                el.props.push(prop);
            }
            Some("end_header") => break,
            Some("comment") | Some("obj_info") | None => {}
            Some(other) => {
                return Err(format_err(path, line_no, format!("unexpected `{other}`")));
            }
        }
    }
    let encoding = encoding.ok_or_else(|| format_err(path, line_no, "missing format line"))?;

    let mut vertices = Vec::new();
    let mut normals: Vec<Vec3> = Vec::new();
    let mut has_normals = false;
    let mut faces = Vec::new();

    let body = &bytes[pos..];
    let mut reader = BodyReader {
        body,
        offset: 0,
        encoding,
        text_line: line_no,
    };
    for el in &elements {
        let idx = |n: &str| el.props.iter().position(|p| p.name() == n);
        let xyz = [idx("x"), idx("y"), idx("z")];
        let nxyz = [idx("nx"), idx("ny"), idx("nz")];
        let face_prop = idx("vertex_indices").or_else(|| idx("vertex_index"));
        if el.name == "vertex" {
            has_normals = nxyz.iter().all(Option::is_some);
        }
        for _ in 0..el.count {
            let values = reader
                .read_instance(&el.props)
                .map_err(|msg| format_err(path, reader.error_line(el), msg))?;
            let scalar = |k: Option<usize>| match k.map(|k| &values[k]) {
                Some(Value::Scalar(v)) => Some(*v),
                _ => None,
            };
            if el.name == "vertex" {
                let p = xyz.map(scalar);
                match p {
                    [Some(x), Some(y), Some(z)] => vertices.push(Vec3::new(x, y, z)),
                    _ => {
                        return Err(format_err(
                            path,
                            el.header_line,
                            "vertex element lacks x/y/z",
                        ))
                    }
                }
                if has_normals {
                    let n = nxyz.map(|k| scalar(k).unwrap_or(0.0));
                    normals.push(Vec3::from(n));
                }
            } else if el.name == "face" {
                if let Some(Value::List(list)) = face_prop.map(|k| &values[k]) {
                    if list.len() < 3 {
                        return Err(format_err(path, reader.error_line(el), "face with < 3 vertices"));
                    }
                    let ids: Vec<usize> = list
                        .iter()
                        .map(|&v| {
                            if v < 0.0 || v.fract() != 0.0 {
                                Err(format_err(path, reader.error_line(el), "bad face index"))
                            } else {
                                Ok(v as usize)
                            }
                        })
                        .collect::<Result<_>>()?;
                    for k in 1..ids.len() - 1 {
                        faces.push([ids[0], ids[k], ids[k + 1]]);
                    }
                }
            }
        }
    }
    if vertices.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no vertices", path.display())));
    }
    let n = vertices.len();
    if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
        let line = elements
            .iter()
            .find(|e| e.name == "face")
            .map_or(0, |e| e.header_line);
        return Err(format_err(path, line, format!("face {f:?} out of range 0..{n}")));
    }
    let surface = Surface::from_mesh(vertices, faces)?;
    if has_normals {
        let normals = normals
            .into_iter()
            .map(|v| {
                let len = v.norm();
                if len > 0.0 {
                    v / len
                } else {
                    Vec3::z()
                }
            })
            .collect();
        surface.with_normals(normals)
    } else {
        Ok(surface)
    }
}

struct BodyReader<'a> {
    body: &'a [u8],
    offset: usize,
    encoding: Encoding,
    text_line: usize,
}

impl BodyReader<'_> {
    fn error_line(&self, el: &Element) -> usize {
        match self.encoding {
            Encoding::Ascii => self.text_line,
            _ => el.header_line,
        }
    }

    fn read_instance(&mut self, props: &[Property]) -> std::result::Result<Vec<Value>, String> {
        match self.encoding {
            Encoding::Ascii => self.read_ascii(props),
            Encoding::BinaryLe => self.read_binary(props, true),
            Encoding::BinaryBe => self.read_binary(props, false),
        }
    }

    fn read_ascii(&mut self, props: &[Property]) -> std::result::Result<Vec<Value>, String> {
        // Skip blank lines between records.
        let line = loop {
            if self.offset >= self.body.len() {
                return Err("unexpected end of data".into());
            }
            let end = self.body[self.offset..]
                .iter()
                .position(|&c| c == b'\n')
                .map_or(self.body.len(), |k| self.offset + k);
            let line = String::from_utf8_lossy(&self.body[self.offset..end]).into_owned();
            self.offset = end + 1;
            self.text_line += 1;
            if !line.trim().is_empty() {
                break line;
            }
        };
        let mut toks = line.split_whitespace();
        let mut next = || -> std::result::Result<f64, String> {
            let t = toks.next().ok_or("record has too few values")?;
            t.parse::<f64>().map_err(|_| format!("bad number `{t}`"))
        };
        let mut out = Vec::with_capacity(props.len());
        for p in props {
            match p {
                Property::Scalar { .. } => out.push(Value::Scalar(next()?)),
                Property::List { .. } => {
                    let n = next()?;
                    if n < 0.0 || n.fract() != 0.0 {
                        return Err("bad list length".into());
                    }
                    let list = (0..n as usize).map(|_| next()).collect::<std::result::Result<_, _>>()?;
                    out.push(Value::List(list));
                }
            }
        }
        Ok(out)
    }

    fn take(&mut self, ty: Scalar, little: bool) -> std::result::Result<f64, String> {
        let n = ty.size();
        if self.offset + n > self.body.len() {
            return Err("unexpected end of binary data".into());
        }
        let v = ty.decode(&self.body[self.offset..self.offset + n], little);
        self.offset += n;
        Ok(v)
    }

    fn read_binary(&mut self, props: &[Property], little: bool) -> std::result::Result<Vec<Value>, String> {
        let mut out = Vec::with_capacity(props.len());
        for p in props {
            match p {
                Property::Scalar { ty, .. } => out.push(Value::Scalar(self.take(*ty, little)?)),
                Property::List { count, item, .. } => {
                    let n = self.take(*count, little)?;
                    if n < 0.0 {
                        return Err("negative list length".into());
                    }
                    let list = (0..n as usize)
                        .map(|_| self.take(*item, little))
                        .collect::<std::result::Result<_, _>>()?;
                    out.push(Value::List(list));
                }
            }
        }
        Ok(out)
    }
}

/// Optional per-vertex and connectivity payload for [`write_ply`].
#[derive(Clone, Copy, Debug, Default)]
pub struct PlyExtras<'a> {
    pub colors: Option<&'a [[u8; 3]]>,
    pub edges: Option<&'a [[usize; 2]]>,
    pub binary: bool,
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_obj(surface: &Surface, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    for v in &surface.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z).map_err(io)?;
    }
    for f in &surface.faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes vertices (with normals when present), faces, and the extras.
pub fn write_ply(surface: &Surface, path: impl AsRef<Path>, extras: PlyExtras<'_>) -> Result<()> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let n = surface.vertices.len();
    if let Some(c) = extras.colors {
        if c.len() != n {
            return Err(Error::InvalidInput(format!("{} colors for {n} vertices", c.len())));
        }
    }
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    let normals = surface.normals.as_deref();
    let mut header = String::from("ply\n");
    header += if extras.binary {
        "format binary_little_endian 1.0\n"
    } else {
        "format ascii 1.0\n"
    };
    header += &format!("element vertex {n}\n");
    let ty = if extras.binary { "float" } else { "double" };
    for c in ["x", "y", "z"] {
        header += &format!("property {ty} {c}\n");
    }
    if normals.is_some() {
        for c in ["nx", "ny", "nz"] {
            header += &format!("property {ty} {c}\n");
        }
    }
    if extras.colors.is_some() {
        for c in ["red", "green", "blue"] {
            header += &format!("property uchar {c}\n");
        }
    }
    if !surface.faces.is_empty() {
        header += &format!(
            "element face {}\nproperty list uchar int vertex_indices\n",
            surface.faces.len()
        );
    }
    if let Some(edges) = extras.edges {
        header += &format!(
            "element edge {}\nproperty int vertex1\nproperty int vertex2\n",
            edges.len()
        );
    }
    header += "end_header\n";
    w.write_all(header.as_bytes()).map_err(io)?;

    for i in 0..n {
        let mut vals = vec![surface.vertices[i]];
        if let Some(nr) = normals {
            vals.push(nr[i]);
        }
        if extras.binary {
            for v in &vals {
                for c in v.iter() {
                    w.write_all(&(*c as f32).to_le_bytes()).map_err(io)?;
                }
            }
            if let Some(c) = extras.colors {
                w.write_all(&c[i]).map_err(io)?;
            }
        } else {
            let mut line = vals
                .iter()
                .flat_map(|v| v.iter().map(|c| c.to_string()))
                .collect::<Vec<_>>()
                .join(" ");
            if let Some(c) = extras.colors {
                line += &format!(" {} {} {}", c[i][0], c[i][1], c[i][2]);
            }
            writeln!(w, "{line}").map_err(io)?;
        }
    }
    for f in &surface.faces {
        if extras.binary {
            w.write_all(&[3u8]).map_err(io)?;
            for &i in f {
                w.write_all(&(i as i32).to_le_bytes()).map_err(io)?;
            }
        } else {
            writeln!(w, "3 {} {} {}", f[0], f[1], f[2]).map_err(io)?;
        }
    }
    if let Some(edges) = extras.edges {
        for e in edges {
            if extras.binary {
                w.write_all(&(e[0] as i32).to_le_bytes()).map_err(io)?;
                w.write_all(&(e[1] as i32).to_le_bytes()).map_err(io)?;
            } else {
                writeln!(w, "{} {}", e[0], e[1]).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

/// Writes a surface in the format implied by the extension.
pub fn save(surface: &Surface, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match MeshFormat::from_path(path) {
        Some(MeshFormat::Obj) => write_obj(surface, path),
        Some(MeshFormat::Ply) => write_ply(surface, path, PlyExtras::default()),
        None => Err(Error::InvalidInput(format!(
            "{}: unknown mesh extension",
            path.display()
        ))),
    }
}

/// Linear blue-to-red ramp: 0 maps to (0, 0, 255), 1 to (255, 0, 0).
pub fn error_color(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 1.0 };
    let r = (255.0 * t).round() as u8;
    [r, 0, 255 - r]
}

/// Writes `surface` as PLY colored by per-vertex error over `[0, max error]`.
pub fn write_error_mesh(surface: &Surface, errors: &[f64], path: impl AsRef<Path>) -> Result<()> {
    if errors.len() != surface.vertices.len() {
        return Err(Error::InvalidInput(format!(
            "{} errors for {} vertices",
            errors.len(),
            surface.vertices.len()
        )));
    }
    let max = errors.iter().copied().fold(0.0_f64, f64::max);
    let colors: Vec<[u8; 3]> = errors
        .iter()
        .map(|&e| error_color(if max > 0.0 { e / max } else { 0.0 }))
        .collect();
    let bare = Surface {
        normals: None,
        ..surface.clone()
    };
    write_ply(
        &bare,
        path,
        PlyExtras {
            colors: Some(&colors),
            ..Default::default()
        },
    )
}

/// Reads back the RGB colors of a PLY written by [`write_error_mesh`].
pub fn read_ply_colors(path: impl AsRef<Path>) -> Result<Vec<[u8; 3]>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let mut n = 0;
    let mut props = Vec::new();
    let mut in_vertex = false;
    for line in lines.by_ref() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["element", "vertex", c] => {
                n = c.parse().map_err(|_| format_err(path, 0, "bad count"))?;
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", _, name] if in_vertex => props.push(name.to_string()),
            ["format", f, ..] if *f != "ascii" => {
                return Err(Error::InvalidInput("color read-back expects ASCII PLY".into()))
            }
            ["end_header"] => break,
            _ => {}
        }
    }
    let at = |name: &str| props.iter().position(|p| p == name);
    let (r, g, b) = match (at("red"), at("green"), at("blue")) {
        (Some(r), Some(g), Some(b)) => (r, g, b),
        _ => return Err(Error::InvalidInput("PLY has no vertex colors".into())),
    };
    lines
        .take(n)
        .map(|line| {
            let t: Vec<&str> = line.split_whitespace().collect();
            let get = |k: usize| {
                t.get(k)
                    .and_then(|s| s.parse::<u8>().ok())
                    .ok_or_else(|| format_err(path, 0, "bad color"))
            };
            Ok([get(r)?, get(g)?, get(b)?])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, content: &[u8]) -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, content).unwrap();
        p
    }

    #[test]
    fn single_triangle_obj() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.obj", b"# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
        let s = load_surface(&p, MeshFormat::Obj).unwrap();
        assert_eq!(s.vertices.len(), 3);
        assert_eq!(s.faces, vec![[0, 1, 2]]);
        assert_eq!(s.edges.len(), 3);
    }

    #[test]
    fn obj_slash_and_negative_indices() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "q.obj",
            b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 -1//1\n",
        );
        let s = load(&p).unwrap();
        assert_eq!(s.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_zero_index_is_format_error_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "z.obj", b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n");
        match load_surface(&p, MeshFormat::Obj) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn empty_obj_is_invalid_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.obj", b"# nothing\n");
        assert!(matches!(load(&p), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn ply_point_cloud() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "p.ply",
            b"ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n",
        );
        let s = load(&p).unwrap();
        assert_eq!(s.vertices.len(), 4);
        assert!(s.edges.is_empty());
        assert!(s.faces.is_empty());
    }

    #[test]
    fn ply_binary_with_normals_and_extra_element() {
        let dir = tempfile::tempdir().unwrap();
        let mut data = b"ply\nformat binary_little_endian 1.0\ncomment x\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\nproperty float nx\nproperty float ny\nproperty float nz\nelement face 1\nproperty list uchar uint vertex_indices\nelement junk 1\nproperty short v\nend_header\n".to_vec();
        for v in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] {
            for c in v {
                data.extend_from_slice(&(c as f64).to_le_bytes());
            }
            for c in [0.0f32, 0.0, 2.0] {
                data.extend_from_slice(&c.to_le_bytes());
            }
        }
        data.push(3);
        for i in [0u32, 1, 2] {
            data.extend_from_slice(&i.to_le_bytes());
        }
        data.extend_from_slice(&7i16.to_le_bytes());
        let p = write(&dir, "b.ply", &data);
        let s = load(&p).unwrap();
        assert_eq!(s.faces, vec![[0, 1, 2]]);
        assert_eq!(s.normals.as_ref().unwrap()[1], Vec3::z());
    }

    #[test]
    fn ply_truncated_binary_reports_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut data = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n".to_vec();
        data.extend_from_slice(&[0u8; 13]);
        let p = write(&dir, "t.ply", &data);
        assert!(matches!(load(&p), Err(Error::Format { line: 3, .. })));
    }

    #[test]
    fn round_trip_obj_and_ply() {
        let dir = tempfile::tempdir().unwrap();
        let v = vec![
            Vec3::new(0.1, 0.2, 0.3),
            Vec3::new(1.0 / 3.0, 0.0, -2.5),
            Vec3::new(0.0, 1e-7, 4.0),
            Vec3::new(1.0, 1.0, 1.0),
        ];
        let s = Surface::from_mesh(v, vec![[0, 1, 2], [1, 3, 2]]).unwrap();
        for name in ["r.obj", "r.ply"] {
            let p = dir.path().join(name);
            save(&s, &p).unwrap();
            let back = load(&p).unwrap();
            assert_eq!(back.faces, s.faces);
            assert_eq!(back.edges, s.edges);
            for (a, b) in back.vertices.iter().zip(&s.vertices) {
                assert!((a - b).norm() < 1e-6);
            }
        }
        let p = dir.path().join("rb.ply");
        write_ply(&s, &p, PlyExtras { binary: true, ..Default::default() }).unwrap();
        let back = load(&p).unwrap();
        assert_eq!(back.faces, s.faces);
        for (a, b) in back.vertices.iter().zip(&s.vertices) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn error_mesh_colors() {
        let dir = tempfile::tempdir().unwrap();
        let s = Surface::from_points(vec![Vec3::zeros(), Vec3::x()]).unwrap();
        let p = dir.path().join("e.ply");
        write_error_mesh(&s, &[0.0, 0.0], &p).unwrap();
        assert_eq!(read_ply_colors(&p).unwrap(), vec![[0, 0, 255]; 2]);
        write_error_mesh(&s, &[0.0, 2.5], &p).unwrap();
        assert_eq!(read_ply_colors(&p).unwrap(), vec![[0, 0, 255], [255, 0, 0]]);
        let back = load(&p).unwrap();
        assert_eq!(back.vertices, s.vertices);
        assert!(write_error_mesh(&s, &[1.0], &p).is_err());
    }
}
