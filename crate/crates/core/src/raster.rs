//! Z-buffered triangle rasterizer with perspective-correct per-vertex colors.
//!
//! Pixel `(x, y)` is sampled at its center `(x + 0.5, y + 0.5)`. Coverage
//! follows the top-left rule so that shared edges are drawn exactly once.
//! Triangles with a vertex at or behind the near cutoff, or with zero
//! screen-space area, are skipped.

use rayon::prelude::*;

use crate::body_model::ColoredVertexSet;
use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::rgb::RasterImage;
use crate::scalar::Real;

/// Rows per parallel work band.
const BAND_ROWS: u32 = 16;

struct ScreenTriangle<T> {
    xy: [[T; 2]; 3],
    inv_depth: [T; 3],
    /// Colors premultiplied by `1 / depth`.
    color_over_z: [[T; 3]; 3],
    area: T,
    /// Which edges are top or left edges.
    top_left: [bool; 3],
    min_x: u32,
    max_x: u32,
    min_y: u32,
    max_y: u32,
}

#[inline]
fn edge<T: Real>(a: [T; 2], b: [T; 2], p: [T; 2]) -> T {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

fn setup<T: Real>(
    verts: &ColoredVertexSet<T>,
    face: [u32; 3],
    cam: &Camera<T>,
) -> Option<ScreenTriangle<T>> {
    let mut xy = [[T::zero(); 2]; 3];
    let mut inv_depth = [T::zero(); 3];
    let mut color_over_z = [[T::zero(); 3]; 3];
    for k in 0..3 {
        let i = face[k] as usize;
        let p = cam.project(verts.positions()[i])?;
        xy[k] = [p.u, p.v];
        inv_depth[k] = T::one() / p.depth;
        let c = verts.colors()[i];
        color_over_z[k] = [
            c[0] * inv_depth[k],
            c[1] * inv_depth[k],
            c[2] * inv_depth[k],
        ];
    }
    let mut area = edge(xy[0], xy[1], xy[2]);
    if !(area.abs() > T::zero()) || !area.is_finite() {
        return None;
    }
    // Normalize to positive orientation (clockwise on screen since y points down).
    if area < T::zero() {
        xy.swap(1, 2);
        inv_depth.swap(1, 2);
        color_over_z.swap(1, 2);
        area = -area;
    }
    // Edge k is opposite vertex k: from xy[k+1] to xy[k+2].
    let mut top_left = [false; 3];
    for (k, tl) in top_left.iter_mut().enumerate() {
        let a = xy[(k + 1) % 3];
        let b = xy[(k + 2) % 3];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        // With positive area in a y-down frame, a top edge is horizontal
        // and runs toward +x; a left edge runs toward −y.
        *tl = (dy == T::zero() && dx > T::zero()) || dy < T::zero();
    }
    let (w, h) = (cam.width(), cam.height());
    let lo = |a: T| {
        // First pixel whose center is >= a.
        let c = (a - T::lit(0.5)).ceil();
        if c <= T::zero() {
            0
        } else {
            c.to_u32().unwrap_or(u32::MAX)
        }
    };
    let hi = |a: T, limit: u32| {
        let f = (a - T::lit(0.5)).floor();
        if f < T::zero() {
            None
        } else {
            Some(f.to_u32().unwrap_or(u32::MAX).min(limit - 1))
        }
    };
    let min_xf = xy[0][0].min(xy[1][0]).min(xy[2][0]);
    let max_xf = xy[0][0].max(xy[1][0]).max(xy[2][0]);
    let min_yf = xy[0][1].min(xy[1][1]).min(xy[2][1]);
    let max_yf = xy[0][1].max(xy[1][1]).max(xy[2][1]);
    let min_x = lo(min_xf);
    let min_y = lo(min_yf);
    let max_x = hi(max_xf, w)?;
    let max_y = hi(max_yf, h)?;
    if min_x > max_x || min_y > max_y {
        return None;
    }
    Some(ScreenTriangle {
        xy,
        inv_depth,
        color_over_z,
        area,
        top_left,
        min_x,
        max_x,
        min_y,
        max_y,
    })
}

/// Renders the mesh with per-vertex colors over a uniform background.
pub fn rasterize<T: Real>(
    verts: &ColoredVertexSet<T>,
    faces: &[[u32; 3]],
    cam: &Camera<T>,
    background: [T; 3],
) -> Result<RasterImage<T>> {
    if let Some(f) = faces
        .iter()
        .position(|f| f.iter().any(|&i| i as usize >= verts.len()))
    {
        return Err(Error::param(format!(
            "face {f} references a vertex >= {}",
            verts.len()
        )));
    }
    let (w, h) = (cam.width(), cam.height());
    let tris: Vec<ScreenTriangle<T>> = faces
        .par_iter()
        .filter_map(|f| setup(verts, *f, cam))
        .collect();

    let mut image = RasterImage::filled(w, h, background);
    let band_len = (BAND_ROWS * w) as usize * 3;
    image
        .data_mut()
        .par_chunks_mut(band_len)
        .enumerate()
        .for_each(|(band, pixels)| {
            let y0 = band as u32 * BAND_ROWS;
            let y1 = (y0 + BAND_ROWS).min(h) - 1;
            let mut zbuf = vec![T::zero(); (y1 - y0 + 1) as usize * w as usize];
            for tri in tris.iter().filter(|t| t.max_y >= y0 && t.min_y <= y1) {
                fill(tri, y0, y1, w, &mut zbuf, pixels);
            }
        });
    Ok(image)
}

/// Z-buffer holds interpolated `1 / depth`; zero means empty.
fn fill<T: Real>(
    tri: &ScreenTriangle<T>,
    y0: u32,
    y1: u32,
    w: u32,
    zbuf: &mut [T],
    pixels: &mut [T],
) {
    let half = T::lit(0.5);
    for y in tri.min_y.max(y0)..=tri.max_y.min(y1) {
        let py = T::from_u32(y).expect("u32 fits") + half;
        for x in tri.min_x..=tri.max_x {
            let p = [T::from_u32(x).expect("u32 fits") + half, py];
            let mut bary = [T::zero(); 3];
            let mut inside = true;
            for k in 0..3 {
                let e = edge(tri.xy[(k + 1) % 3], tri.xy[(k + 2) % 3], p);
                if e < T::zero() || (e == T::zero() && !tri.top_left[k]) {
                    inside = false;
                    break;
                }
                bary[k] = e / tri.area;
            }
            if !inside {
                continue;
            }
            let inv_z = bary[0] * tri.inv_depth[0]
                + bary[1] * tri.inv_depth[1]
                + bary[2] * tri.inv_depth[2];
            let slot = ((y - y0) * w + x) as usize;
            // Strictly nearer wins; equal depth keeps the earlier triangle.
            if !(inv_z > zbuf[slot]) {
                continue;
            }
            zbuf[slot] = inv_z;
            let z = T::one() / inv_z;
            for c in 0..3 {
                let num = bary[0] * tri.color_over_z[0][c]
                    + bary[1] * tri.color_over_z[1][c]
                    + bary[2] * tri.color_over_z[2][c];
                pixels[slot * 3 + c] = (num * z).max(T::zero()).min(T::one());
            }
        }
    }
}

/// Pixels covered by at least one triangle.
pub fn coverage_mask<T: Real>(
    verts: &ColoredVertexSet<T>,
    faces: &[[u32; 3]],
    cam: &Camera<T>,
) -> Result<Vec<bool>> {
    // Render black on white with all-black vertex colors.
    let black = ColoredVertexSet::with_uniform_color(verts.positions().to_vec(), [T::zero(); 3])?;
    let img = rasterize(&black, faces, cam, [T::one(); 3])?;
    Ok(img
        .data()
        .chunks_exact(3)
        .map(|p| p[0] == T::zero())
        .collect())
}
