//! Triangle meshes with per-vertex colors: subdivision, texture sampling
//! and OBJ / PLY file I/O.

mod obj;
mod ply;
mod subdivide;
mod texture;

pub use obj::{read_obj, write_obj};
pub use ply::{read_ply, write_ply};
pub use subdivide::{count_unique_edges, subdivide_midpoint, Subdivided};
pub use texture::{sample_vertex_colors, sample_vertex_colors_wedged, ColorSamples};

use std::path::Path;

use crate::body_model::ColoredVertexSet;
use crate::error::{Error, Result};
use crate::io_util::{atomic_write, read_file};
use crate::rgb::extension;
use crate::scalar::Real;

/// Texture coordinates: one per vertex, or per face corner ("wedges") when
/// a vertex sits on a uv seam.
#[derive(Clone, Debug, PartialEq)]
pub enum TexCoords<T> {
    PerVertex(Vec<[T; 2]>),
    Wedge {
        uvs: Vec<[T; 2]>,
        /// One `uvs` index per face corner, parallel to the face list.
        faces: Vec<[u32; 3]>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh<T> {
    pub vertices: ColoredVertexSet<T>,
    pub faces: Vec<[u32; 3]>,
    pub uv: Option<TexCoords<T>>,
}

impl<T: Real> Mesh<T> {
    pub fn new(vertices: ColoredVertexSet<T>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let mesh = Self {
            vertices,
            faces,
            uv: None,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if let Some(f) = self
            .faces
            .iter()
            .position(|f| f.iter().any(|&i| i as usize >= n))
        {
            return Err(Error::param(format!("face {f} references a vertex >= {n}")));
        }
        match &self.uv {
            Some(TexCoords::PerVertex(uv)) if uv.len() != n => Err(Error::param(format!(
                "{} per-vertex uvs for {n} vertices",
                uv.len()
            ))),
            Some(TexCoords::Wedge { uvs, faces }) => {
                if faces.len() != self.faces.len() {
                    return Err(Error::param("wedge uv faces must parallel the face list"));
                }
                if faces.iter().flatten().any(|&i| i as usize >= uvs.len()) {
                    return Err(Error::param("wedge uv index out of range"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Loads `.obj` or `.ply` by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let name = path.display().to_string();
        let mesh = match extension(path).as_str() {
            "obj" => read_obj(&bytes, &name)?,
            "ply" => read_ply(&bytes, &name)?,
            other => {
                return Err(Error::Format(format!(
                    "unsupported mesh extension '{other}' for {name}"
                )))
            }
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match extension(path).as_str() {
            "obj" => atomic_write(path, |w| write_obj(self, w)),
            "ply" => atomic_write(path, |w| write_ply(self, w)),
            other => Err(Error::Format(format!(
                "unsupported mesh extension '{other}' for {}",
                path.display()
            ))),
        }
    }

    /// Total triangle area.
    pub fn area(&self) -> T {
        let p = self.vertices.positions();
        self.faces
            .iter()
            .map(|f| {
                let a = p[f[0] as usize];
                let b = crate::linalg::sub(p[f[1] as usize], a);
                let c = crate::linalg::sub(p[f[2] as usize], a);
                crate::linalg::norm(crate::linalg::cross(b, c)) * T::lit(0.5)
            })
            .fold(T::zero(), |acc, x| acc + x)
    }
}

/// Shape shared by test helpers: the regular tetrahedron.
pub fn tetrahedron<T: Real>() -> Mesh<T> {
    let one = T::one();
    let positions = vec![
        [one, one, one],
        [one, -one, -one],
        [-one, one, -one],
        [-one, -one, one],
    ];
    let colors = vec![
        [one, T::zero(), T::zero()],
        [T::zero(), one, T::zero()],
        [T::zero(), T::zero(), one],
        [one, one, T::zero()],
    ];
    Mesh {
        vertices: ColoredVertexSet::new(positions, colors).expect("valid"),
        faces: vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
        uv: None,
    }
}
