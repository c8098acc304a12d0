use std::collections::HashMap;

use super::{Mesh, TexCoords};
use crate::body_model::ColoredVertexSet;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Result of one round of midpoint subdivision.
#[derive(Clone, Debug)]
pub struct Subdivided<T> {
    pub mesh: Mesh<T>,
    /// Input edges in the order their midpoints were appended.
    pub edges: Vec<[u32; 2]>,
}

#[inline]
fn key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Number of distinct undirected edges.
pub fn count_unique_edges(faces: &[[u32; 3]]) -> usize {
    let mut set = std::collections::HashSet::with_capacity(faces.len() * 2);
    for f in faces {
        for k in 0..3 {
            set.insert(key(f[k], f[(k + 1) % 3]));
        }
    }
    set.len()
}

/// Splits every edge at its midpoint and every triangle into four.
///
/// Midpoints average the endpoint positions, colors and per-vertex uvs and
/// are appended after the original vertices in first-seen edge order, so
/// `V' = V + E` and `F' = 4F`. Wedge uvs are split per face corner.
/// An edge shared by more than two faces is a topology error.
pub fn subdivide_midpoint<T: Real>(mesh: &Mesh<T>) -> Result<Subdivided<T>> {
    mesh.validate()?;
    let n = mesh.vertices.len();
    let mut edge_index: HashMap<(u32, u32), (u32, u8)> =
        HashMap::with_capacity(mesh.faces.len() * 2);
    let mut edges = Vec::new();
    for f in &mesh.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if a == b {
                return Err(Error::Topology(format!("face {f:?} repeats a vertex")));
            }
            let next = (n + edges.len()) as u32;
            let entry = edge_index.entry(key(a, b)).or_insert_with(|| {
                edges.push([a, b]);
                (next, 0)
            });
            entry.1 += 1;
            if entry.1 > 2 {
                return Err(Error::Topology(format!(
                    "non-manifold edge ({}, {}) shared by more than two faces",
                    a.min(b),
                    a.max(b)
                )));
            }
        }
    }

    let half = T::lit(0.5);
    let mid = |p: [T; 3], q: [T; 3]| {
        [
            (p[0] + q[0]) * half,
            (p[1] + q[1]) * half,
            (p[2] + q[2]) * half,
        ]
    };
    let mut positions = mesh.vertices.positions().to_vec();
    let mut colors = mesh.vertices.colors().to_vec();
    positions.reserve(edges.len());
    colors.reserve(edges.len());
    for &[a, b] in &edges {
        let (a, b) = (a as usize, b as usize);
        positions.push(mid(positions[a], positions[b]));
        colors.push(mid(colors[a], colors[b]));
    }

    let mid_of = |a: u32, b: u32| edge_index[&key(a, b)].0;
    let mut faces = Vec::with_capacity(mesh.faces.len() * 4);
    for &[a, b, c] in &mesh.faces {
        let (ab, bc, ca) = (mid_of(a, b), mid_of(b, c), mid_of(c, a));
        faces.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
    }

    let uv = match &mesh.uv {
        None => None,
        Some(TexCoords::PerVertex(uv)) => {
            let mut out = uv.clone();
            for &[a, b] in &edges {
                let (p, q) = (uv[a as usize], uv[b as usize]);
                out.push([(p[0] + q[0]) * half, (p[1] + q[1]) * half]);
            }
            Some(TexCoords::PerVertex(out))
        }
        Some(TexCoords::Wedge {
            uvs,
            faces: uv_faces,
        }) => {
            // Seams make uv edges distinct from position edges; split per corner pair.
            let mut out = uvs.clone();
            let mut uv_mid: HashMap<(u32, u32), u32> = HashMap::new();
            let mut mid_uv = |a: u32, b: u32, out: &mut Vec<[T; 2]>| {
                *uv_mid.entry(key(a, b)).or_insert_with(|| {
                    let (p, q) = (out[a as usize], out[b as usize]);
                    out.push([(p[0] + q[0]) * half, (p[1] + q[1]) * half]);
                    (out.len() - 1) as u32
                })
            };
            let mut new_faces = Vec::with_capacity(uv_faces.len() * 4);
            for &[a, b, c] in uv_faces {
                let ab = mid_uv(a, b, &mut out);
                let bc = mid_uv(b, c, &mut out);
                let ca = mid_uv(c, a, &mut out);
                new_faces.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            Some(TexCoords::Wedge {
                uvs: out,
                faces: new_faces,
            })
        }
    };

    Ok(Subdivided {
        mesh: Mesh {
            vertices: ColoredVertexSet::new(positions, colors)?,
            faces,
            uv,
        },
        edges,
    })
}
