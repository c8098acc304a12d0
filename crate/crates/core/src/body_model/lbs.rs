use rayon::prelude::*;

use super::{BodyModel, ColoredVertexSet, PoseParams, ShapeParams};
use crate::error::{Error, Result};
use crate::linalg::{self, Affine3, Vec3};
use crate::scalar::Real;

/// Blended transforms with a Frobenius condition number above this are
/// treated as non-invertible.
pub const MAX_SKINNING_CONDITION: f64 = 1e8;

impl<T: Real> BodyModel<T> {
    fn check_beta(&self, beta: &ShapeParams<T>) -> Result<()> {
        if beta.len() != self.num_shape() {
            return Err(Error::param(format!(
                "shape vector has length {}, model has {} shape dims",
                beta.len(),
                self.num_shape()
            )));
        }
        Ok(())
    }

    fn check_theta(&self, theta: &PoseParams<T>) -> Result<()> {
        if theta.as_slice().len() != self.pose_len() {
            return Err(Error::param(format!(
                "pose vector has length {}, model expects {}",
                theta.as_slice().len(),
                self.pose_len()
            )));
        }
        Ok(())
    }

    fn check_vertices(&self, count: usize) -> Result<()> {
        if count != self.num_vertices() {
            return Err(Error::param(format!(
                "vertex count {count} does not match model ({})",
                self.num_vertices()
            )));
        }
        Ok(())
    }

    /// `B_S(β) = Σ_s β_s · S_s`, one offset per vertex.
    pub fn shape_offsets(&self, beta: &ShapeParams<T>) -> Result<Vec<Vec3<T>>> {
        self.check_beta(beta)?;
        let s = self.num_shape();
        if s == 0 {
            return Ok(vec![[T::zero(); 3]; self.num_vertices()]);
        }
        let beta = beta.as_slice();
        Ok(self
            .shape_basis()
            .chunks_exact(3 * s)
            .map(|rows| {
                [
                    contract(&rows[..s], beta),
                    contract(&rows[s..2 * s], beta),
                    contract(&rows[2 * s..], beta),
                ]
            })
            .collect())
    }

    /// Flattened `R(θ_j) − I` for every non-root joint, in joint index order.
    pub fn pose_features(&self, theta: &PoseParams<T>) -> Result<Vec<T>> {
        self.check_theta(theta)?;
        let root = self.root();
        let mut feats = Vec::with_capacity(self.num_pose_features());
        for j in (0..self.num_joints()).filter(|&j| j != root) {
            let r = linalg::rodrigues(theta.joint(j));
            for (a, row) in r.iter().enumerate() {
                for (b, &x) in row.iter().enumerate() {
                    feats.push(if a == b { x - T::one() } else { x });
                }
            }
        }
        Ok(feats)
    }

    /// `B_P(θ)`: pose features contracted with the pose basis.
    pub fn pose_offsets(&self, theta: &PoseParams<T>) -> Result<Vec<Vec3<T>>> {
        let feats = self.pose_features(theta)?;
        let p = feats.len();
        if p == 0 || feats.iter().all(|f| *f == T::zero()) {
            return Ok(vec![[T::zero(); 3]; self.num_vertices()]);
        }
        Ok(self
            .pose_basis()
            .par_chunks_exact(3 * p)
            .map(|rows| {
                [
                    contract(&rows[..p], &feats),
                    contract(&rows[p..2 * p], &feats),
                    contract(&rows[2 * p..], &feats),
                ]
            })
            .collect())
    }

    /// Applies the joint regressor to arbitrary rest vertices.
    pub fn regress_joints(&self, vertices: &[Vec3<T>]) -> Result<Vec<Vec3<T>>> {
        self.check_vertices(vertices.len())?;
        let n = self.num_vertices();
        Ok(self
            .joint_regressor()
            .chunks_exact(n)
            .map(|row| {
                let mut j = [T::zero(); 3];
                for (w, v) in row.iter().zip(vertices) {
                    if *w != T::zero() {
                        for k in 0..3 {
                            j[k] += *w * v[k];
                        }
                    }
                }
                j
            })
            .collect())
    }

    /// Rest vertices `T̄ + B_S(β)`.
    pub fn shaped_template(&self, beta: &ShapeParams<T>) -> Result<Vec<Vec3<T>>> {
        let offsets = self.shape_offsets(beta)?;
        Ok(self
            .template()
            .iter()
            .zip(offsets)
            .map(|(t, o)| linalg::add(*t, o))
            .collect())
    }

    /// `J(β) = 𝒥 · (T̄ + B_S(β))`.
    pub fn joint_locations(&self, beta: &ShapeParams<T>) -> Result<Vec<Vec3<T>>> {
        let rest = self.shaped_template(beta)?;
        self.regress_joints(&rest)
    }

    /// Joint-centered world transforms `A_j`: they map a rest-pose point
    /// bound rigidly to joint `j` to its posed location.
    pub fn joint_transforms(
        &self,
        joints: &[Vec3<T>],
        theta: &PoseParams<T>,
    ) -> Result<Vec<Affine3<T>>> {
        self.check_theta(theta)?;
        if joints.len() != self.num_joints() {
            return Err(Error::param(format!(
                "{} joint locations for a {}-joint model",
                joints.len(),
                self.num_joints()
            )));
        }
        let mut world = vec![Affine3::identity(); self.num_joints()];
        for &j in self.joint_order() {
            let rot = linalg::rodrigues(theta.joint(j));
            let local = match self.parents()[j] {
                None => Affine3::new(rot, joints[j]),
                Some(p) => Affine3::new(rot, linalg::sub(joints[j], joints[p])),
            };
            world[j] = match self.parents()[j] {
                None => local,
                Some(p) => world[p].compose(&local),
            };
        }
        Ok(world
            .into_iter()
            .zip(joints)
            .map(|(g, rest)| {
                // G_j · [I | −J_j]
                let moved = linalg::mat_vec(&g.linear, *rest);
                Affine3::new(g.linear, linalg::sub(g.translation, moved))
            })
            .collect())
    }

    /// Per-vertex blended transforms `Σ_j w_ij A_j`.
    pub fn blended_transforms(&self, transforms: &[Affine3<T>]) -> Vec<Affine3<T>> {
        let j = self.num_joints();
        self.skin_weights()
            .par_chunks_exact(j)
            .map(|weights| {
                let mut m = Affine3::zero();
                for (w, a) in weights.iter().zip(transforms) {
                    if *w != T::zero() {
                        m.add_weighted(a, *w);
                    }
                }
                m
            })
            .collect()
    }

    /// Skins already pose-corrected rest vertices `T_P` with the given joints.
    pub fn skin(
        &self,
        rest: &[Vec3<T>],
        joints: &[Vec3<T>],
        theta: &PoseParams<T>,
    ) -> Result<Vec<Vec3<T>>> {
        self.check_vertices(rest.len())?;
        let transforms = self.joint_transforms(joints, theta)?;
        // Every joint transform is the identity; skip the blend so the rest
        // pose is reproduced bit-exactly.
        if theta.as_slice().iter().all(|x| *x == T::zero()) {
            return Ok(rest.to_vec());
        }
        let blended = self.blended_transforms(&transforms);
        Ok(blended
            .par_iter()
            .zip(rest.par_iter())
            .map(|(m, v)| m.apply(*v))
            .collect())
    }

    /// Adds `B_P(θ)` to `rest` and skins it around `joints`.
    pub fn pose_vertices(
        &self,
        rest: &[Vec3<T>],
        joints: &[Vec3<T>],
        theta: &PoseParams<T>,
    ) -> Result<Vec<Vec3<T>>> {
        self.check_vertices(rest.len())?;
        let pose_offsets = self.pose_offsets(theta)?;
        let corrected: Vec<Vec3<T>> = rest
            .iter()
            .zip(pose_offsets)
            .map(|(v, o)| linalg::add(*v, o))
            .collect();
        self.skin(&corrected, joints, theta)
    }

    /// Full forward model: shape, pose blendshapes, then LBS.
    pub fn pose_mesh(&self, beta: &ShapeParams<T>, theta: &PoseParams<T>) -> Result<Vec<Vec3<T>>> {
        self.check_theta(theta)?;
        let rest = self.shaped_template(beta)?;
        let joints = self.regress_joints(&rest)?;
        self.pose_vertices(&rest, &joints, theta)
    }

    /// Inverts LBS for a posed registration and removes `B_P(θ)`, yielding a
    /// subject-specific rest template. Colors pass through unchanged.
    ///
    /// The joints are `J(β)`, the same ones used when the registration was
    /// posed.
    pub fn unpose(
        &self,
        posed: &ColoredVertexSet<T>,
        beta: &ShapeParams<T>,
        theta: &PoseParams<T>,
    ) -> Result<ColoredVertexSet<T>> {
        let joints = self.joint_locations(beta)?;
        self.unpose_with_joints(posed, &joints, theta)
    }

    pub fn unpose_with_joints(
        &self,
        posed: &ColoredVertexSet<T>,
        joints: &[Vec3<T>],
        theta: &PoseParams<T>,
    ) -> Result<ColoredVertexSet<T>> {
        self.check_vertices(posed.len())?;
        let transforms = self.joint_transforms(joints, theta)?;
        if theta.as_slice().iter().all(|x| *x == T::zero()) {
            return Ok(posed.clone());
        }
        let blended = self.blended_transforms(&transforms);
        let pose_offsets = self.pose_offsets(theta)?;
        let positions = blended
            .par_iter()
            .zip(posed.positions().par_iter())
            .zip(pose_offsets.par_iter())
            .enumerate()
            .map(|(i, ((m, x), o))| {
                let inv = invert_checked(m, i)?;
                Ok(linalg::sub(inv.apply(*x), *o))
            })
            .collect::<Result<Vec<_>>>()?;
        posed.with_positions(positions)
    }

    /// Poses a subject-specific template; joints are regressed from the
    /// template itself.
    pub fn repose_subject(
        &self,
        template_star: &ColoredVertexSet<T>,
        theta: &PoseParams<T>,
    ) -> Result<ColoredVertexSet<T>> {
        self.check_vertices(template_star.len())?;
        let joints = self.regress_joints(template_star.positions())?;
        let posed = self.pose_vertices(template_star.positions(), &joints, theta)?;
        template_star.with_positions(posed)
    }
}

fn invert_checked<T: Real>(m: &Affine3<T>, vertex: usize) -> Result<Affine3<T>> {
    let inv = m.inverse().ok_or(Error::DegenerateSkinning {
        vertex,
        condition: f64::INFINITY,
    })?;
    let condition = (linalg::frobenius(&m.linear) * linalg::frobenius(&inv.linear)).to_f64_lossy();
    if !(condition <= MAX_SKINNING_CONDITION) {
        return Err(Error::DegenerateSkinning { vertex, condition });
    }
    Ok(inv)
}

/// Dot product accumulated left to right.
#[inline]
fn contract<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}
