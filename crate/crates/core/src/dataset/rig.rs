//! Emulated scanner rig: cameras on a sphere section around a target.

use crate::camera::{Camera, Intrinsics};
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scalar::Real;

/// Half-width of the elevation band covered by the rig, in degrees.
pub const RIG_ELEVATION_DEG: f64 = 30.0;

/// Viewing directions (unit vectors from target to eye), on a golden-angle
/// spiral over the elevation band. `n = 1` gives a single frontal view
/// from `−z`.
pub fn rig_directions(n: usize) -> Vec<Vec3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let band = RIG_ELEVATION_DEG.to_radians().sin();
    (0..n)
        .map(|i| {
            let h = band * (1.0 - 2.0 * (i as f64 + 0.5) / n as f64);
            let el = h.asin();
            let az = golden * i as f64;
            [-az.sin() * el.cos(), h, -az.cos() * el.cos()]
        })
        .collect()
}

/// `n` cameras at distance `radius` from `target`, all looking at it with
/// world `+y` as image-up.
pub fn camera_rig<T: Real>(
    n: usize,
    radius: T,
    target: Vec3<T>,
    intrinsics: Intrinsics<T>,
    width: u32,
    height: u32,
) -> Result<Vec<Camera<T>>> {
    if n == 0 {
        return Err(Error::param("camera rig needs at least one camera"));
    }
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(Error::param("camera rig radius must be positive"));
    }
    let up = [T::zero(), T::one(), T::zero()];
    rig_directions(n)
        .into_iter()
        .map(|d| {
            let eye = [0, 1, 2].map(|k| target[k] + radius * T::lit(d[k]));
            Camera::look_at(eye, target, up, intrinsics, width, height)
        })
        .collect()
}
