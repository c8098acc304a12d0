use crate::error::{Error, Result};
use crate::rgb::TextureImage;
use crate::scalar::Real;

/// Per-vertex colors sampled from a texture.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorSamples<T> {
    pub colors: Vec<[T; 3]>,
    /// How many uv coordinates fell outside `[0, 1]²` and were clamped.
    pub clamped: usize,
}

/// Bilinear lookup with clamp-to-edge addressing.
///
/// `u` runs left to right and `v` bottom to top (`v = 0` is the last image
/// row), so texel `(i, j)` has its center at
/// `((i + 0.5) / w, 1 − (j + 0.5) / h)`.
fn bilinear<T: Real>(tex: &TextureImage<T>, uv: [T; 2]) -> [T; 3] {
    let (w, h) = (tex.width(), tex.height());
    let half = T::lit(0.5);
    let fx = uv[0] * T::from_u32(w).expect("u32") - half;
    let fy = (T::one() - uv[1]) * T::from_u32(h).expect("u32") - half;
    let max_x = T::from_u32(w - 1).expect("u32");
    let max_y = T::from_u32(h - 1).expect("u32");
    let fx = fx.max(T::zero()).min(max_x);
    let fy = fy.max(T::zero()).min(max_y);
    let x0 = fx.floor();
    let y0 = fy.floor();
    let (tx, ty) = (fx - x0, fy - y0);
    let x0 = x0.to_u32().unwrap_or(0);
    let y0 = y0.to_u32().unwrap_or(0);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let (c00, c10, c01, c11) = (
        tex.pixel(x0, y0),
        tex.pixel(x1, y0),
        tex.pixel(x0, y1),
        tex.pixel(x1, y1),
    );
    let mut out = [T::zero(); 3];
    for k in 0..3 {
        let top = c00[k] + (c10[k] - c00[k]) * tx;
        let bottom = c01[k] + (c11[k] - c01[k]) * tx;
        out[k] = (top + (bottom - top) * ty).max(T::zero()).min(T::one());
    }
    out
}

fn clamp_uv<T: Real>(uv: [T; 2], clamped: &mut usize) -> Result<[T; 2]> {
    if !(uv[0].is_finite() && uv[1].is_finite()) {
        return Err(Error::param("non-finite uv coordinate"));
    }
    let c = uv.map(|x| x.max(T::zero()).min(T::one()));
    if c != uv {
        *clamped += 1;
    }
    Ok(c)
}

/// One bilinear texture sample per vertex uv.
pub fn sample_vertex_colors<T: Real>(
    tex: &TextureImage<T>,
    uv: &[[T; 2]],
) -> Result<ColorSamples<T>> {
    let mut clamped = 0;
    let mut colors = Vec::with_capacity(uv.len());
    for &t in uv {
        let t = clamp_uv(t, &mut clamped)?;
        colors.push(bilinear(tex, t));
    }
    Ok(ColorSamples { colors, clamped })
}

/// Per-vertex colors from wedge uvs: each vertex averages the samples at
/// the distinct uv indices of all face corners it appears in. Vertices not
/// referenced by any face get mid-gray.
pub fn sample_vertex_colors_wedged<T: Real>(
    tex: &TextureImage<T>,
    num_vertices: usize,
    faces: &[[u32; 3]],
    uvs: &[[T; 2]],
    uv_faces: &[[u32; 3]],
) -> Result<ColorSamples<T>> {
    if faces.len() != uv_faces.len() {
        return Err(Error::param("uv faces must parallel the face list"));
    }
    let samples = sample_vertex_colors(tex, uvs)?;
    let mut wedges: Vec<Vec<u32>> = vec![Vec::new(); num_vertices];
    for (f, tf) in faces.iter().zip(uv_faces) {
        for k in 0..3 {
            let v = f[k] as usize;
            if v >= num_vertices || tf[k] as usize >= uvs.len() {
                return Err(Error::param("face or uv index out of range"));
            }
            if !wedges[v].contains(&tf[k]) {
                wedges[v].push(tf[k]);
            }
        }
    }
    let colors = wedges
        .iter()
        .map(|ids| {
            if ids.is_empty() {
                return [T::lit(0.5); 3];
            }
            let mut acc = [T::zero(); 3];
            for &i in ids {
                for k in 0..3 {
                    acc[k] += samples.colors[i as usize][k];
                }
            }
            let n = T::from_usize_lossy(ids.len());
            acc.map(|x| (x / n).max(T::zero()).min(T::one()))
        })
        .collect();
    Ok(ColorSamples {
        colors,
        clamped: samples.clamped,
    })
}
