//! Pinhole camera: world point → pixel coordinates plus metric depth.
//!
//! Camera space has `x` to the right, `y` down and `z` forward. A point
//! projects to `u = (K x_c)_0 / z_c`, `v = (K x_c)_1 / z_c` with
//! `x_c = R x + t`; the returned depth is the metric `z_c`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::{atomic_write_bytes, read_file};
use crate::linalg::{self, Mat3, Vec3};
use crate::scalar::Real;

/// Points at or closer than this depth (meters) are behind the camera.
pub const NEAR_EPSILON: f64 = 1e-6;

const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
}

/// Image-plane location and metric depth of a projected point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection<T> {
    pub u: T,
    pub v: T,
    pub depth: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Camera<T> {
    k: Mat3<T>,
    k_inv: Mat3<T>,
    r: Mat3<T>,
    t: Vec3<T>,
    width: u32,
    height: u32,
}

impl<T: Real> Camera<T> {
    /// Validates `K` (positive focal lengths, last row `[0 0 1]`), `R`
    /// (orthonormal, `det > 0`) and the image size.
    pub fn new(k: Mat3<T>, r: Mat3<T>, t: Vec3<T>, width: u32, height: u32) -> Result<Self> {
        let all_finite = k
            .iter()
            .chain(r.iter())
            .flatten()
            .chain(t.iter())
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::param("camera has non-finite entries"));
        }
        if !(k[0][0] > T::zero() && k[1][1] > T::zero()) {
            return Err(Error::param("focal lengths must be positive"));
        }
        if k[1][0] != T::zero()
            || k[2][0] != T::zero()
            || k[2][1] != T::zero()
            || k[2][2] != T::one()
        {
            return Err(Error::param(
                "intrinsics must be upper triangular with K[2][2] = 1",
            ));
        }
        let rtr = linalg::mat_mul(&linalg::transpose(&r), &r);
        if linalg::max_abs_diff(&rtr, &linalg::identity()) >= T::lit(ORTHONORMAL_TOLERANCE) {
            return Err(Error::param("rotation is not orthonormal"));
        }
        if !(linalg::det(&r) > T::zero()) {
            return Err(Error::param("rotation has negative determinant"));
        }
        if width == 0 || height == 0 {
            return Err(Error::param("image size must be at least 1x1"));
        }
        let k_inv = linalg::inverse(&k).ok_or_else(|| Error::param("singular intrinsics"))?;
        Ok(Self {
            k,
            k_inv,
            r,
            t,
            width,
            height,
        })
    }

    /// Zero-skew intrinsics.
    pub fn from_intrinsics(
        intr: Intrinsics<T>,
        r: Mat3<T>,
        t: Vec3<T>,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let (z, o) = (T::zero(), T::one());
        let k = [[intr.fx, z, intr.cx], [z, intr.fy, intr.cy], [z, z, o]];
        Self::new(k, r, t, width, height)
    }

    /// Camera at `eye` looking at `target`, with image-up along `up`.
    pub fn look_at(
        eye: Vec3<T>,
        target: Vec3<T>,
        up: Vec3<T>,
        intr: Intrinsics<T>,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let forward = linalg::normalize(linalg::sub(target, eye))
            .ok_or_else(|| Error::param("look_at: eye coincides with target"))?;
        let up = linalg::normalize(up).ok_or_else(|| Error::param("look_at: zero up vector"))?;
        let right_raw = linalg::cross(forward, up);
        if linalg::norm(right_raw) < T::lit(1e-9) {
            return Err(Error::param(
                "look_at: up vector is parallel to the view direction",
            ));
        }
        let right = linalg::normalize(right_raw)
            .ok_or_else(|| Error::param("look_at: degenerate up vector"))?;
        let down = linalg::cross(forward, right);
        let r = [right, down, forward];
        let re = linalg::mat_vec(&r, eye);
        Self::from_intrinsics(intr, r, [-re[0], -re[1], -re[2]], width, height)
    }

    pub fn intrinsics_matrix(&self) -> &Mat3<T> {
        &self.k
    }

    pub fn rotation(&self) -> &Mat3<T> {
        &self.r
    }

    pub fn translation(&self) -> Vec3<T> {
        self.t
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Camera center in world coordinates, `−Rᵀ t`.
    pub fn center(&self) -> Vec3<T> {
        let c = linalg::mat_vec(&linalg::transpose(&self.r), self.t);
        [-c[0], -c[1], -c[2]]
    }

    #[inline]
    pub fn to_camera(&self, x: Vec3<T>) -> Vec3<T> {
        linalg::add(linalg::mat_vec(&self.r, x), self.t)
    }

    /// `None` when the point is at or behind the near cutoff.
    #[inline]
    pub fn project(&self, x: Vec3<T>) -> Option<Projection<T>> {
        let c = self.to_camera(x);
        let depth = c[2];
        if !(depth > T::lit(NEAR_EPSILON)) {
            return None;
        }
        let k = &self.k;
        let xn = c[0] / depth;
        let yn = c[1] / depth;
        Some(Projection {
            u: k[0][0] * xn + k[0][1] * yn + k[0][2],
            v: k[1][1] * yn + k[1][2],
            depth,
        })
    }

    /// World point at pixel `(u, v)` and metric depth `d`.
    pub fn unproject(&self, u: T, v: T, depth: T) -> Vec3<T> {
        let ray = linalg::mat_vec(&self.k_inv, [u, v, T::one()]);
        let c = linalg::scale(ray, depth);
        linalg::mat_vec(&linalg::transpose(&self.r), linalg::sub(c, self.t))
    }

    pub fn cast<U: Real>(&self) -> Camera<U> {
        let m = |a: &Mat3<T>| a.map(|row| row.map(|x| U::lit(x.to_f64_lossy())));
        Camera {
            k: m(&self.k),
            k_inv: m(&self.k_inv),
            r: m(&self.r),
            t: self.t.map(|x| U::lit(x.to_f64_lossy())),
            width: self.width,
            height: self.height,
        }
    }

    pub fn to_json(&self) -> CameraJson {
        let m = |a: &Mat3<T>| a.map(|row| row.map(|x| x.to_f64_lossy()));
        CameraJson {
            k: m(&self.k),
            r: m(&self.r),
            t: self.t.map(|x| x.to_f64_lossy()),
            width: self.width,
            height: self.height,
        }
    }

    pub fn from_json(json: &CameraJson) -> Result<Self> {
        let m = |a: &[[f64; 3]; 3]| a.map(|row| row.map(T::lit));
        Self::new(
            m(&json.k),
            m(&json.r),
            json.t.map(T::lit),
            json.width,
            json.height,
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let json: CameraJson = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        Self::from_json(&json)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_json())?;
        text.push('\n');
        atomic_write_bytes(path, text.as_bytes())
    }
}

/// On-disk camera description with row-major matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraJson {
    #[serde(rename = "K")]
    pub k: [[f64; 3]; 3],
    #[serde(rename = "R")]
    pub r: [[f64; 3]; 3],
    pub t: [f64; 3],
    pub width: u32,
    pub height: u32,
}
