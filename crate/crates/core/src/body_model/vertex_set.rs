use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scalar::Real;

/// Vertex positions (meters) paired with per-vertex RGB colors in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColoredVertexSet<T> {
    positions: Vec<Vec3<T>>,
    colors: Vec<Vec3<T>>,
}

impl<T: Real> ColoredVertexSet<T> {
    /// Colors are clamped into `[0, 1]`; positions must be finite.
    pub fn new(positions: Vec<Vec3<T>>, colors: Vec<Vec3<T>>) -> Result<Self> {
        if positions.len() != colors.len() {
            return Err(Error::param(format!(
                "{} positions but {} colors",
                positions.len(),
                colors.len()
            )));
        }
        if let Some(i) = positions
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::param(format!("non-finite position at vertex {i}")));
        }
        let colors = colors
            .into_iter()
            .map(|c| {
                c.map(|x| {
                    if x.is_nan() {
                        T::zero()
                    } else {
                        x.max(T::zero()).min(T::one())
                    }
                })
            })
            .collect();
        Ok(Self { positions, colors })
    }

    /// Uniform color for every vertex.
    pub fn with_uniform_color(positions: Vec<Vec3<T>>, color: Vec3<T>) -> Result<Self> {
        let colors = vec![color; positions.len()];
        Self::new(positions, colors)
    }

    pub fn empty() -> Self {
        Self {
            positions: Vec::new(),
            colors: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3<T>] {
        &self.positions
    }

    pub fn colors(&self) -> &[Vec3<T>] {
        &self.colors
    }

    /// Replaces positions, keeping colors.
    pub fn with_positions(&self, positions: Vec<Vec3<T>>) -> Result<Self> {
        Self::new(positions, self.colors.clone())
    }

    pub fn into_parts(self) -> (Vec<Vec3<T>>, Vec<Vec3<T>>) {
        (self.positions, self.colors)
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> ColoredVertexSet<U> {
        let conv = |v: &Vec3<T>| v.map(|x| U::lit(x.to_f64_lossy()));
        ColoredVertexSet {
            positions: self.positions.iter().map(conv).collect(),
            colors: self.colors.iter().map(conv).collect(),
        }
    }
}
