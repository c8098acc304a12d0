//! Stanford PLY: reads ASCII and binary little-endian, writes binary
//! little-endian.
//!
//! Recognized vertex properties are `x y z`, colors as `red green blue`
//! (or `r g b`; integer types are scaled by their maximum, floats are taken
//! as is) and per-vertex texture coordinates as `s t`, `u v` or
//! `texture_u texture_v`. Faces come from `vertex_indices` (or
//! `vertex_index`) and optional per-corner `texcoord` lists.

use std::io::Write;

use super::{Mesh, TexCoords};
use crate::body_model::ColoredVertexSet;
use crate::error::{Error, Result};
use crate::scalar::Real;

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

    /// Divisor that maps the type's range to `[0, 1]` for color channels.
    fn color_max(self) -> f64 {
        match self {
            Scalar::U8 => 255.0,
            Scalar::U16 => 65535.0,
            Scalar::I8 => 127.0,
            Scalar::I16 => 32767.0,
            Scalar::I32 => i32::MAX as f64,
            Scalar::U32 => u32::MAX as f64,
            Scalar::F32 | Scalar::F64 => 1.0,
        }
    }
}

#[derive(Clone, Debug)]
enum PropKind {
    Scalar(Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Clone, Debug)]
struct Property {
    name: String,
    kind: PropKind,
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Encoding {
    Ascii,
    BinaryLe,
}

/// Streams values out of either encoding.
enum Reader<'a> {
    Binary {
        bytes: &'a [u8],
        pos: usize,
    },
    Ascii {
        tokens: std::iter::Peekable<TokenIter<'a>>,
    },
}

struct TokenIter<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    current: Vec<&'a str>,
    at: usize,
    line: usize,
    first_line: usize,
}

impl<'a> Iterator for TokenIter<'a> {
    type Item = (usize, &'a str);
    fn next(&mut self) -> Option<Self::Item> {
        while self.at >= self.current.len() {
            let (i, l) = self.lines.next()?;
            self.current = l.split_whitespace().collect();
            self.at = 0;
            self.line = self.first_line + i;
        }
        self.at += 1;
        Some((self.line, self.current[self.at - 1]))
    }
}

impl Reader<'_> {
    fn read(&mut self, ty: Scalar, name: &str) -> Result<f64> {
        match self {
            Reader::Binary { bytes, pos } => {
                let n = ty.size();
                if *pos + n > bytes.len() {
                    return Err(Error::Parse {
                        path: name.to_string(),
                        location: format!("byte offset {pos}"),
                        message: "unexpected end of binary payload".into(),
                    });
                }
                let b = &bytes[*pos..*pos + n];
                *pos += n;
                Ok(match ty {
                    Scalar::I8 => b[0] as i8 as f64,
                    Scalar::U8 => b[0] as f64,
                    Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
                    Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
                    Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
                    Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
                    Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
                    Scalar::F64 => f64::from_le_bytes(b.try_into().expect("8 bytes")),
                })
            }
            Reader::Ascii { tokens } => {
                let (line, tok) = tokens.next().ok_or_else(|| Error::Parse {
                    path: name.to_string(),
                    location: "end of file".into(),
                    message: "unexpected end of ASCII payload".into(),
                })?;
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    path: name.to_string(),
                    location: format!("line {line}"),
                    message: format!("bad number '{tok}'"),
                })
            }
        }
    }

    fn location(&self) -> String {
        match self {
            Reader::Binary { pos, .. } => format!("byte offset {pos}"),
            Reader::Ascii { .. } => "ASCII payload".into(),
        }
    }
}

fn header_err(name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: name.to_string(),
        location: format!("header line {line}"),
        message: message.into(),
    }
}

fn parse_header(bytes: &[u8], name: &str) -> Result<(Encoding, Vec<Element>, usize, usize)> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| header_err(name, line_no + 1, "unterminated header"))?;
        let line = std::str::from_utf8(&bytes[pos..pos + end])
            .map_err(|_| header_err(name, line_no + 1, "header is not UTF-8"))?
            .trim_end_matches('\r')
            .trim();
        pos += end + 1;
        line_no += 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["ply"] if line_no == 1 => {}
            _ if line_no == 1 => return Err(header_err(name, 1, "missing 'ply' magic")),
            ["format", "ascii", _] => encoding = Some(Encoding::Ascii),
            ["format", "binary_little_endian", _] => encoding = Some(Encoding::BinaryLe),
            ["format", other, ..] => {
                return Err(header_err(
                    name,
                    line_no,
                    format!("unsupported format '{other}'"),
                ))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", ename, count] => elements.push(Element {
                name: ename.to_string(),
                count: count.parse().map_err(|_| {
                    header_err(name, line_no, format!("bad element count '{count}'"))
                })?,
                props: Vec::new(),
            }),
            ["property", "list", count, item, pname] => {
                let kind = PropKind::List {
                    count: Scalar::parse(count).ok_or_else(|| {
                        header_err(name, line_no, format!("unknown type '{count}'"))
                    })?,
                    item: Scalar::parse(item).ok_or_else(|| {
                        header_err(name, line_no, format!("unknown type '{item}'"))
                    })?,
                };
                elements
                    .last_mut()
                    .ok_or_else(|| header_err(name, line_no, "property before element"))?
                    .props
                    .push(Property {
                        name: pname.to_string(),
                        kind,
                    });
            }
            ["property", ty, pname] => {
                let kind =
                    PropKind::Scalar(Scalar::parse(ty).ok_or_else(|| {
                        header_err(name, line_no, format!("unknown type '{ty}'"))
                    })?);
                elements
                    .last_mut()
                    .ok_or_else(|| header_err(name, line_no, "property before element"))?
                    .props
                    .push(Property {
                        name: pname.to_string(),
                        kind,
                    });
            }
            ["end_header"] => break,
            _ => {
                return Err(header_err(
                    name,
                    line_no,
                    format!("unrecognized header line '{line}'"),
                ))
            }
        }
    }
    let encoding = encoding.ok_or_else(|| header_err(name, line_no, "missing format line"))?;
    Ok((encoding, elements, pos, line_no))
}

pub fn read_ply<T: Real>(bytes: &[u8], name: &str) -> Result<Mesh<T>> {
    let (encoding, elements, body, header_lines) = parse_header(bytes, name)?;
    let mut reader = match encoding {
        Encoding::BinaryLe => Reader::Binary { bytes, pos: body },
        Encoding::Ascii => {
            let text = std::str::from_utf8(&bytes[body..]).map_err(|e| Error::Parse {
                path: name.to_string(),
                location: format!("byte offset {}", body + e.valid_up_to()),
                message: "ASCII payload is not UTF-8".into(),
            })?;
            Reader::Ascii {
                tokens: TokenIter {
                    lines: text.lines().enumerate(),
                    current: Vec::new(),
                    at: 0,
                    line: 0,
                    first_line: header_lines + 1,
                }
                .peekable(),
            }
        }
    };

    let mut positions: Vec<[T; 3]> = Vec::new();
    let mut colors: Vec<[T; 3]> = Vec::new();
    let mut uv: Vec<[T; 2]> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut wedge_uvs: Vec<[T; 2]> = Vec::new();
    let mut wedge_faces: Vec<[u32; 3]> = Vec::new();
    let mut faces_have_texcoord = false;

    for el in &elements {
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        let find = |names: &[&str]| {
            el.props
                .iter()
                .position(|p| names.contains(&p.name.as_str()))
        };
        let (ix, iy, iz) = (find(&["x"]), find(&["y"]), find(&["z"]));
        let color_idx = [
            find(&["red", "r"]),
            find(&["green", "g"]),
            find(&["blue", "b"]),
        ];
        let has_color = color_idx.iter().all(Option::is_some);
        let uv_idx = [
            find(&["s", "u", "texture_u"]),
            find(&["t", "v", "texture_v"]),
        ];
        let has_uv = uv_idx.iter().all(Option::is_some);
        if is_vertex && (ix.is_none() || iy.is_none() || iz.is_none()) {
            return Err(Error::Format(format!("{name}: vertex element lacks x/y/z")));
        }
        let face_idx = find(&["vertex_indices", "vertex_index"]);
        let tex_idx = find(&["texcoord"]);
        if is_face {
            faces_have_texcoord = tex_idx.is_some();
            if face_idx.is_none() {
                return Err(Error::Format(format!(
                    "{name}: face element lacks vertex_indices"
                )));
            }
        }
        let mut scalars = vec![0.0f64; el.props.len()];
        let mut lists: Vec<Vec<f64>> = vec![Vec::new(); el.props.len()];
        for row in 0..el.count {
            for (k, prop) in el.props.iter().enumerate() {
                match prop.kind {
                    PropKind::Scalar(ty) => scalars[k] = reader.read(ty, name)?,
                    PropKind::List { count, item } => {
                        let n = reader.read(count, name)?;
                        if !(n >= 0.0) || n.fract() != 0.0 {
                            return Err(Error::Parse {
                                path: name.to_string(),
                                location: reader.location(),
                                message: format!("bad list length {n}"),
                            });
                        }
                        lists[k].clear();
                        for _ in 0..n as usize {
                            lists[k].push(reader.read(item, name)?);
                        }
                    }
                }
            }
            if is_vertex {
                let (x, y, z) = (
                    scalars[ix.unwrap()],
                    scalars[iy.unwrap()],
                    scalars[iz.unwrap()],
                );
                positions.push([T::lit(x), T::lit(y), T::lit(z)]);
                colors.push(if has_color {
                    color_idx.map(|i| {
                        let i = i.expect("checked");
                        let max = match el.props[i].kind {
                            PropKind::Scalar(ty) => ty.color_max(),
                            PropKind::List { .. } => 1.0,
                        };
                        T::lit(scalars[i] / max)
                    })
                } else {
                    [T::lit(0.5); 3]
                });
                if has_uv {
                    uv.push(uv_idx.map(|i| T::lit(scalars[i.expect("checked")])));
                }
            } else if is_face {
                let idx = &lists[face_idx.expect("checked")];
                if idx.len() < 3 {
                    return Err(Error::Parse {
                        path: name.to_string(),
                        location: reader.location(),
                        message: format!("face {row} has fewer than 3 vertices"),
                    });
                }
                let tex = tex_idx.map(|t| &lists[t]);
                for k in 1..idx.len() - 1 {
                    let corners = [0, k, k + 1];
                    let tri = corners.map(|c| idx[c]);
                    if tri
                        .iter()
                        .any(|&v| !(v >= 0.0) || v.fract() != 0.0 || v >= u32::MAX as f64)
                    {
                        return Err(Error::Parse {
                            path: name.to_string(),
                            location: reader.location(),
                            message: format!("face {row} has an invalid vertex index"),
                        });
                    }
                    faces.push(tri.map(|v| v as u32));
                    if let Some(tex) = tex {
                        if tex.len() != 2 * idx.len() {
                            return Err(Error::Parse {
                                path: name.to_string(),
                                location: reader.location(),
                                message: format!("face {row} texcoord list length mismatch"),
                            });
                        }
                        let base = wedge_uvs.len() as u32;
                        for c in corners {
                            wedge_uvs.push([T::lit(tex[2 * c]), T::lit(tex[2 * c + 1])]);
                        }
                        wedge_faces.push([base, base + 1, base + 2]);
                    }
                }
            }
        }
    }
    if let Reader::Binary { pos, .. } = reader {
        if pos != bytes.len() {
            return Err(Error::Parse {
                path: name.to_string(),
                location: format!("byte offset {pos}"),
                message: format!("{} trailing bytes", bytes.len() - pos),
            });
        }
    }

    let n = positions.len();
    let vertices = ColoredVertexSet::new(positions, colors)?;
    let uv = if faces_have_texcoord && !faces.is_empty() {
        Some(TexCoords::Wedge {
            uvs: wedge_uvs,
            faces: wedge_faces,
        })
    } else if !uv.is_empty() && uv.len() == n {
        Some(TexCoords::PerVertex(uv))
    } else {
        None
    };
    let mesh = Mesh {
        vertices,
        faces,
        uv,
    };
    mesh.validate()
        .map_err(|e| Error::Format(format!("{name}: {e}")))?;
    Ok(mesh)
}

/// Binary little-endian PLY with float positions and float colors (lossless
/// at f32 precision).
pub fn write_ply<T: Real, W: Write>(mesh: &Mesh<T>, mut w: W) -> std::io::Result<()> {
    let per_vertex_uv = match &mesh.uv {
        Some(TexCoords::PerVertex(uv)) => Some(uv),
        _ => None,
    };
    let wedge = match &mesh.uv {
        Some(TexCoords::Wedge { uvs, faces }) => Some((uvs, faces)),
        _ => None,
    };
    let mut header =
        String::from("ply\nformat binary_little_endian 1.0\ncomment written by smplpix\n");
    header.push_str(&format!("element vertex {}\n", mesh.vertices.len()));
    header.push_str("property float x\nproperty float y\nproperty float z\n");
    header.push_str("property float red\nproperty float green\nproperty float blue\n");
    if per_vertex_uv.is_some() {
        header.push_str("property float s\nproperty float t\n");
    }
    header.push_str(&format!("element face {}\n", mesh.faces.len()));
    header.push_str("property list uchar int vertex_indices\n");
    if wedge.is_some() {
        header.push_str("property list uchar float texcoord\n");
    }
    header.push_str("end_header\n");
    let mut buf = header.into_bytes();
    let f = |x: T| x.to_f32_lossy().to_le_bytes();
    for (i, (p, c)) in mesh
        .vertices
        .positions()
        .iter()
        .zip(mesh.vertices.colors())
        .enumerate()
    {
        for x in p.iter().chain(c.iter()) {
            buf.extend_from_slice(&f(*x));
        }
        if let Some(uv) = per_vertex_uv {
            buf.extend_from_slice(&f(uv[i][0]));
            buf.extend_from_slice(&f(uv[i][1]));
        }
    }
    for (i, face) in mesh.faces.iter().enumerate() {
        buf.push(3);
        for &v in face {
            buf.extend_from_slice(&(v as i32).to_le_bytes());
        }
        if let Some((uvs, uv_faces)) = wedge {
            buf.push(6);
            for &t in &uv_faces[i] {
                buf.extend_from_slice(&f(uvs[t as usize][0]));
                buf.extend_from_slice(&f(uvs[t as usize][1]));
            }
        }
    }
    w.write_all(&buf)
}
