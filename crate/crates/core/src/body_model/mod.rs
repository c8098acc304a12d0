//! Blend-skinned body model: template, shape and pose blendshapes, joint
//! regressor, skinning weights and kinematic tree.
//!
//! Posing follows the usual linear blend skinning recipe:
//!
//! ```text
//! T_P(β, θ) = T̄ + B_S(β) + B_P(θ)
//! J(β)      = 𝒥 · (T̄ + B_S(β))
//! x_i       = Σ_j w_ij · A_j(θ, J) · T_P,i
//! ```
//!
//! where `A_j` are joint-centered world transforms chained along the
//! kinematic tree and `B_P` is driven by the flattened `R(θ_j) − I` of every
//! non-root joint.

mod io;
mod lbs;
mod params;
mod vertex_set;

pub use io::{read_bsm1, write_bsm1, BSM1_MAGIC};
pub use params::{PoseParams, PoseSequence, ShapeParams};
pub use vertex_set::ColoredVertexSet;

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scalar::Real;

/// Number of vertices of the reference body topology.
pub const REFERENCE_VERTEX_COUNT: usize = 6890;
/// Joint count (root included) of the reference body topology.
pub const REFERENCE_JOINT_COUNT: usize = 24;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

/// Raw arrays of a body model, prior to validation.
///
/// Layouts (all row-major, flattened):
/// - `shape_basis`: `N × 3 × S`, index `(v * 3 + axis) * S + s`
/// - `pose_basis`: `N × 3 × 9(J−1)`, index `(v * 3 + axis) * P + p`
/// - `joint_regressor`: `J × N`
/// - `skin_weights`: `N × J`
#[derive(Clone, Debug, PartialEq)]
pub struct BodyModelParts<T> {
    pub template: Vec<Vec3<T>>,
    pub num_shape: usize,
    pub shape_basis: Vec<T>,
    pub pose_basis: Vec<T>,
    pub joint_regressor: Vec<T>,
    pub skin_weights: Vec<T>,
    pub parents: Vec<Option<usize>>,
    pub faces: Vec<[u32; 3]>,
    pub uv: Option<Vec<[T; 2]>>,
    /// Per-vertex template colors of a specific subject, if known.
    pub colors: Option<Vec<Vec3<T>>>,
}

/// A validated body model. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct BodyModel<T> {
    parts: BodyModelParts<T>,
    /// Joints sorted so that every parent precedes its children.
    order: Vec<usize>,
}

impl<T: Real> BodyModel<T> {
    pub fn new(parts: BodyModelParts<T>) -> Result<Self> {
        let n = parts.template.len();
        let j = parts.parents.len();
        let s = parts.num_shape;
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if n == 0 || j == 0 {
            return bad(format!("need N > 0 and J > 0, got N={n}, J={j}"));
        }
        if parts.shape_basis.len() != n * 3 * s {
            return bad(format!(
                "shape basis has {} entries, expected {}",
                parts.shape_basis.len(),
                n * 3 * s
            ));
        }
        let p = 9 * (j - 1);
        if parts.pose_basis.len() != n * 3 * p {
            return bad(format!(
                "pose basis has {} entries, expected {}",
                parts.pose_basis.len(),
                n * 3 * p
            ));
        }
        if parts.joint_regressor.len() != j * n {
            return bad(format!("joint regressor must be {j}x{n}"));
        }
        if parts.skin_weights.len() != n * j {
            return bad(format!("skin weights must be {n}x{j}"));
        }
        let all_finite = parts.template.iter().flatten().all(|x| x.is_finite())
            && parts.shape_basis.iter().all(|x| x.is_finite())
            && parts.pose_basis.iter().all(|x| x.is_finite())
            && parts.joint_regressor.iter().all(|x| x.is_finite());
        if !all_finite {
            return bad("non-finite entries in model arrays".into());
        }
        for (v, row) in parts.skin_weights.chunks_exact(j).enumerate() {
            if row.iter().any(|w| !(*w >= T::zero())) {
                return bad(format!("negative or NaN skin weight at vertex {v}"));
            }
            let sum: f64 = row.iter().map(|w| w.to_f64_lossy()).sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return bad(format!("skin weights of vertex {v} sum to {sum}"));
            }
        }
        if let Some(f) = parts
            .faces
            .iter()
            .position(|f| f.iter().any(|&i| i as usize >= n))
        {
            return bad(format!("face {f} references a vertex >= {n}"));
        }
        if let Some(uv) = &parts.uv {
            if uv.len() != n {
                return bad(format!("uv has {} rows, expected {n}", uv.len()));
            }
        }
        if let Some(colors) = &parts.colors {
            if colors.len() != n {
                return bad(format!("colors have {} rows, expected {n}", colors.len()));
            }
        }
        if n == REFERENCE_VERTEX_COUNT && j != REFERENCE_JOINT_COUNT {
            return bad(format!(
                "reference topology ({n} vertices) requires {REFERENCE_JOINT_COUNT} joints, got {j}"
            ));
        }
        let order = topological_order(&parts.parents).map_err(Error::InvalidModel)?;
        Ok(Self { parts, order })
    }

    pub fn num_vertices(&self) -> usize {
        self.parts.template.len()
    }

    pub fn num_joints(&self) -> usize {
        self.parts.parents.len()
    }

    pub fn num_shape(&self) -> usize {
        self.parts.num_shape
    }

    /// Length of the pose feature vector, `9 · (J − 1)`.
    pub fn num_pose_features(&self) -> usize {
        9 * (self.num_joints() - 1)
    }

    /// Length of a pose vector, `3 · J`.
    pub fn pose_len(&self) -> usize {
        3 * self.num_joints()
    }

    pub fn template(&self) -> &[Vec3<T>] {
        &self.parts.template
    }

    pub fn shape_basis(&self) -> &[T] {
        &self.parts.shape_basis
    }

    pub fn pose_basis(&self) -> &[T] {
        &self.parts.pose_basis
    }

    pub fn joint_regressor(&self) -> &[T] {
        &self.parts.joint_regressor
    }

    pub fn skin_weights(&self) -> &[T] {
        &self.parts.skin_weights
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parts.parents
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.parts.faces
    }

    pub fn uv(&self) -> Option<&[[T; 2]]> {
        self.parts.uv.as_deref()
    }

    pub fn colors(&self) -> Option<&[Vec3<T>]> {
        self.parts.colors.as_deref()
    }

    pub fn root(&self) -> usize {
        self.order[0]
    }

    /// Joint indices with parents before children.
    pub fn joint_order(&self) -> &[usize] {
        &self.order
    }

    pub fn parts(&self) -> &BodyModelParts<T> {
        &self.parts
    }

    pub fn into_parts(self) -> BodyModelParts<T> {
        self.parts
    }

    /// Template colors, or uniform mid-gray when the model carries none.
    pub fn template_colors(&self) -> Vec<Vec3<T>> {
        match &self.parts.colors {
            Some(c) => c.clone(),
            None => vec![[T::lit(0.5); 3]; self.num_vertices()],
        }
    }

    /// Uniformly scales all geometry (template and both blendshape bases)
    /// about the origin. Weights, regressor and topology are unchanged.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        if !(factor > T::zero()) || !factor.is_finite() {
            return Err(Error::param("scale factor must be positive and finite"));
        }
        let mut parts = self.parts.clone();
        for v in &mut parts.template {
            *v = v.map(|x| x * factor);
        }
        for x in parts
            .shape_basis
            .iter_mut()
            .chain(parts.pose_basis.iter_mut())
        {
            *x *= factor;
        }
        Self::new(parts)
    }

    /// Converts every array to another scalar type.
    pub fn cast<U: Real>(&self) -> BodyModel<U> {
        let c = |x: &T| U::lit(x.to_f64_lossy());
        let c3 = |v: &Vec3<T>| v.map(|x| U::lit(x.to_f64_lossy()));
        let p = &self.parts;
        BodyModel {
            parts: BodyModelParts {
                template: p.template.iter().map(c3).collect(),
                num_shape: p.num_shape,
                shape_basis: p.shape_basis.iter().map(c).collect(),
                pose_basis: p.pose_basis.iter().map(c).collect(),
                joint_regressor: p.joint_regressor.iter().map(c).collect(),
                skin_weights: p.skin_weights.iter().map(c).collect(),
                parents: p.parents.clone(),
                faces: p.faces.clone(),
                uv: p.uv.as_ref().map(|uv| {
                    uv.iter()
                        .map(|t| t.map(|x| U::lit(x.to_f64_lossy())))
                        .collect()
                }),
                colors: p.colors.as_ref().map(|c| c.iter().map(c3).collect()),
            },
            order: self.order.clone(),
        }
    }
}

/// Breadth-first order from the unique root; errors on forests and cycles.
fn topological_order(parents: &[Option<usize>]) -> std::result::Result<Vec<usize>, String> {
    let n = parents.len();
    let roots: Vec<usize> = (0..n).filter(|&j| parents[j].is_none()).collect();
    if roots.len() != 1 {
        return Err(format!(
            "kinematic tree needs exactly one root, found {}",
            roots.len()
        ));
    }
    let mut children = vec![Vec::new(); n];
    for (j, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            if p >= n {
                return Err(format!("joint {j} has parent {p} out of range"));
            }
            if p == j {
                return Err(format!("joint {j} is its own parent"));
            }
            children[p].push(j);
        }
    }
    let mut order = Vec::with_capacity(n);
    order.push(roots[0]);
    let mut head = 0;
    while head < order.len() {
        let j = order[head];
        head += 1;
        order.extend(children[j].iter().copied());
    }
    if order.len() != n {
        return Err("kinematic tree contains a cycle or unreachable joints".into());
    }
    Ok(order)
}
