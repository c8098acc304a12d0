//! Small fixed-size linear algebra over [`Real`].
//!
//! Vectors are `[T; 3]`, matrices are row-major `[[T; 3]; 3]`. Rigid and
//! blended skinning transforms are stored as [`Affine3`].

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

#[inline]
pub fn add<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale<T: Real>(a: Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm<T: Real>(a: Vec3<T>) -> T {
    dot(a, a).sqrt()
}

/// Returns `None` for (near) zero-length input.
pub fn normalize<T: Real>(a: Vec3<T>) -> Option<Vec3<T>> {
    let n = norm(a);
    if n > T::epsilon() && n.is_finite() {
        Some(scale(a, T::one() / n))
    } else {
        None
    }
}

pub fn identity<T: Real>() -> Mat3<T> {
    let (o, z) = (T::one(), T::zero());
    [[o, z, z], [z, o, z], [z, z, o]]
}

#[inline]
pub fn mat_vec<T: Real>(m: &Mat3<T>, v: Vec3<T>) -> Vec3<T> {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

pub fn mat_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn transpose<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    [
        [m[0][0], m[1][0], m[2][0]],
        [m[0][1], m[1][1], m[2][1]],
        [m[0][2], m[1][2], m[2][2]],
    ]
}

pub fn det<T: Real>(m: &Mat3<T>) -> T {
    dot(m[0], cross(m[1], m[2]))
}

/// Inverse via the adjugate; `None` when the determinant vanishes.
pub fn inverse<T: Real>(m: &Mat3<T>) -> Option<Mat3<T>> {
    let c0 = cross(m[1], m[2]);
    let c1 = cross(m[2], m[0]);
    let c2 = cross(m[0], m[1]);
    let d = dot(m[0], c0);
    if d == T::zero() || !d.is_finite() {
        return None;
    }
    let inv = T::one() / d;
    // Columns of the inverse are the cofactor rows scaled by 1/det.
    Some(transpose(&[scale(c0, inv), scale(c1, inv), scale(c2, inv)]))
}

pub fn frobenius<T: Real>(m: &Mat3<T>) -> T {
    m.iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |acc, &x| acc + x * x)
        .sqrt()
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> T {
    let mut out = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            out = out.max((a[i][j] - b[i][j]).abs());
        }
    }
    out
}

/// Rotation matrix of an axis-angle vector (Rodrigues' formula).
///
/// The zero vector maps to the exact identity.
pub fn rodrigues<T: Real>(w: Vec3<T>) -> Mat3<T> {
    let theta2 = dot(w, w);
    if theta2 == T::zero() {
        return identity();
    }
    let (a, b) = if theta2 < T::lit(1e-12) {
        // Taylor expansions of sin(t)/t and (1-cos t)/t^2.
        (
            T::one() - theta2 / T::lit(6.0),
            T::lit(0.5) - theta2 / T::lit(24.0),
        )
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (T::one() - theta.cos()) / theta2)
    };
    let [x, y, z] = w;
    let k = [[T::zero(), -z, y], [z, T::zero(), -x], [-y, x, T::zero()]];
    let kk = mat_mul(&k, &k);
    let mut r = identity();
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] += a * k[i][j] + b * kk[i][j];
        }
    }
    r
}

/// Affine map `x -> linear * x + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine3<T> {
    pub linear: Mat3<T>,
    pub translation: Vec3<T>,
}

impl<T: Real> Affine3<T> {
    pub fn identity() -> Self {
        Self {
            linear: identity(),
            translation: [T::zero(); 3],
        }
    }

    pub fn zero() -> Self {
        Self {
            linear: [[T::zero(); 3]; 3],
            translation: [T::zero(); 3],
        }
    }

    pub fn new(linear: Mat3<T>, translation: Vec3<T>) -> Self {
        Self {
            linear,
            translation,
        }
    }

    #[inline]
    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        add(mat_vec(&self.linear, p), self.translation)
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            linear: mat_mul(&self.linear, &other.linear),
            translation: self.apply(other.translation),
        }
    }

    /// Accumulates `w * other` into `self` (used for skinning blends).
    pub fn add_weighted(&mut self, other: &Self, w: T) {
        for i in 0..3 {
            for j in 0..3 {
                self.linear[i][j] += w * other.linear[i][j];
            }
            self.translation[i] += w * other.translation[i];
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        let inv = inverse(&self.linear)?;
        let t = mat_vec(&inv, self.translation);
        Some(Self {
            linear: inv,
            translation: [-t[0], -t[1], -t[2]],
        })
    }
}
