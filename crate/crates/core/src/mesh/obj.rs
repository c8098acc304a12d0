//! Wavefront OBJ with the common `v x y z r g b` vertex-color extension.

use std::io::Write;

use super::{Mesh, TexCoords};
use crate::body_model::ColoredVertexSet;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn write_obj<T: Real, W: Write>(mesh: &Mesh<T>, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "# {} vertices, {} faces",
        mesh.vertices.len(),
        mesh.faces.len()
    )?;
    for (p, c) in mesh.vertices.positions().iter().zip(mesh.vertices.colors()) {
        writeln!(
            w,
            "v {} {} {} {} {} {}",
            p[0].to_f32_lossy(),
            p[1].to_f32_lossy(),
            p[2].to_f32_lossy(),
            c[0].to_f32_lossy(),
            c[1].to_f32_lossy(),
            c[2].to_f32_lossy()
        )?;
    }
    let uv_faces: Option<&[[u32; 3]]> = match &mesh.uv {
        None => None,
        Some(TexCoords::PerVertex(uv)) => {
            for t in uv {
                writeln!(w, "vt {} {}", t[0].to_f32_lossy(), t[1].to_f32_lossy())?;
            }
            Some(&mesh.faces)
        }
        Some(TexCoords::Wedge { uvs, faces }) => {
            for t in uvs {
                writeln!(w, "vt {} {}", t[0].to_f32_lossy(), t[1].to_f32_lossy())?;
            }
            Some(faces)
        }
    };
    for (i, f) in mesh.faces.iter().enumerate() {
        match uv_faces {
            Some(tf) => {
                let t = tf[i];
                writeln!(
                    w,
                    "f {}/{} {}/{} {}/{}",
                    f[0] + 1,
                    t[0] + 1,
                    f[1] + 1,
                    t[1] + 1,
                    f[2] + 1,
                    t[2] + 1
                )?
            }
            None => writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?,
        }
    }
    Ok(())
}

fn parse_err(name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: name.to_string(),
        location: format!("line {line}"),
        message: message.into(),
    }
}

/// Resolves a 1-based (or negative, relative) OBJ index.
fn resolve(token: &str, count: usize, name: &str, line: usize) -> Result<u32> {
    let i: i64 = token
        .parse()
        .map_err(|_| parse_err(name, line, format!("bad index '{token}'")))?;
    let idx = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        return Err(parse_err(name, line, "index 0 is invalid in OBJ"));
    };
    if idx < 0 || idx as usize >= count {
        return Err(parse_err(name, line, format!("index {i} out of range")));
    }
    Ok(idx as u32)
}

/// Polygons are fan-triangulated. Vertices without colors get mid-gray.
/// Texture coordinates become per-vertex when every vertex maps to a single
/// `vt`, wedge coordinates otherwise, and are dropped if any corner lacks one.
pub fn read_obj<T: Real>(bytes: &[u8], name: &str) -> Result<Mesh<T>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        path: name.to_string(),
        location: format!("byte {}", e.valid_up_to()),
        message: "file is not valid UTF-8".into(),
    })?;
    let mut positions = Vec::new();
    let mut colors = Vec::new();
    let mut uvs: Vec<[T; 2]> = Vec::new();
    let mut faces = Vec::new();
    let mut uv_faces: Vec<Option<[u32; 3]>> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        let rest: Vec<&str> = tokens.collect();
        let nums = |min: usize| -> Result<Vec<T>> {
            if rest.len() < min {
                return Err(parse_err(
                    name,
                    line_no,
                    format!("'{tag}' needs at least {min} values"),
                ));
            }
            rest.iter()
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .map(T::lit)
                        .ok_or_else(|| parse_err(name, line_no, format!("bad number '{s}'")))
                })
                .collect()
        };
        match tag {
            "v" => {
                let v = nums(3)?;
                positions.push([v[0], v[1], v[2]]);
                colors.push(match v.len() {
                    6 | 7 => [v[3], v[4], v[5]],
                    _ => [T::lit(0.5); 3],
                });
            }
            "vt" => {
                let t = nums(2)?;
                uvs.push([t[0], t[1]]);
            }
            "f" => {
                if rest.len() < 3 {
                    return Err(parse_err(name, line_no, "face needs at least 3 vertices"));
                }
                let mut corners = Vec::with_capacity(rest.len());
                for tok in &rest {
                    let mut parts = tok.split('/');
                    let v = resolve(parts.next().unwrap_or(""), positions.len(), name, line_no)?;
                    let t = match parts.next() {
                        Some(s) if !s.is_empty() => Some(resolve(s, uvs.len(), name, line_no)?),
                        _ => None,
                    };
                    corners.push((v, t));
                }
                for k in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[k], corners[k + 1]];
                    faces.push(tri.map(|c| c.0));
                    uv_faces.push(match tri {
                        [(_, Some(a)), (_, Some(b)), (_, Some(c))] => Some([a, b, c]),
                        _ => None,
                    });
                }
            }
            _ => {}
        }
    }

    let vertices = ColoredVertexSet::new(positions, colors)?;
    let uv = if faces.is_empty() || uvs.is_empty() || uv_faces.iter().any(Option::is_none) {
        None
    } else {
        let uv_faces: Vec<[u32; 3]> = uv_faces.into_iter().map(|t| t.expect("checked")).collect();
        let mut per_vertex: Vec<Option<u32>> = vec![None; vertices.len()];
        let mut consistent = true;
        'outer: for (f, t) in faces.iter().zip(&uv_faces) {
            for k in 0..3 {
                let slot = &mut per_vertex[f[k] as usize];
                match slot {
                    None => *slot = Some(t[k]),
                    Some(prev) if uvs[*prev as usize] == uvs[t[k] as usize] => {}
                    Some(_) => {
                        consistent = false;
                        break 'outer;
                    }
                }
            }
        }
        if consistent && per_vertex.iter().all(Option::is_some) {
            Some(TexCoords::PerVertex(
                per_vertex
                    .iter()
                    .map(|t| uvs[t.expect("checked") as usize])
                    .collect(),
            ))
        } else {
            Some(TexCoords::Wedge {
                uvs,
                faces: uv_faces,
            })
        }
    };
    Ok(Mesh {
        vertices,
        faces,
        uv,
    })
}
