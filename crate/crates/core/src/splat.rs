//! Vertex splatting into sparse RGB-D projection images.
//!
//! Every vertex lands on exactly one pixel, `data[⌊v⌋][⌊u⌋]`, with `u` the
//! column and `v` the row. When several vertices share a pixel the one with
//! the smallest depth wins; exact depth ties go to the lowest vertex id.
//! Pixels nobody lands on keep the background value `(1, 1, 1, 1)`.

use std::path::Path;

use rayon::prelude::*;

use crate::body_model::ColoredVertexSet;
use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::io_util::{atomic_write_bytes, read_file};
use crate::rgb::RgbImage;
use crate::scalar::Real;

pub const RGBD_MAGIC: &[u8; 4] = b"RGBD";
pub const RGBD_VERSION: u8 = 1;
/// Header flag: depth channel holds normalized rather than metric depth.
pub const FLAG_DEPTH_NORMALIZED: u8 = 1;
/// Reserved for an optional mask channel; never set by this crate.
pub const FLAG_MASK_RESERVED: u8 = 2;
pub const BACKGROUND: f32 = 1.0;
const HEADER_LEN: usize = 4 + 1 + 1 + 4 + 4;

/// Vertex counts above this are projected in parallel.
const PARALLEL_PROJECTION_THRESHOLD: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionImage {
    width: u32,
    height: u32,
    depth_normalized: bool,
    data: Vec<f32>,
}

impl ProjectionImage {
    /// All-background image.
    pub fn background(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            depth_normalized: false,
            data: vec![BACKGROUND; width as usize * height as usize * 4],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn is_depth_normalized(&self) -> bool {
        self.depth_normalized
    }

    /// Row-major, channel-interleaved RGBD.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [f32; 4] {
        let i = (y as usize * self.width as usize + x as usize) * 4;
        [
            self.data[i],
            self.data[i + 1],
            self.data[i + 2],
            self.data[i + 3],
        ]
    }

    #[inline]
    pub fn is_background(&self, x: u32, y: u32) -> bool {
        self.pixel(x, y) == [BACKGROUND; 4]
    }

    /// Number of pixels holding a vertex.
    pub fn occupancy(&self) -> usize {
        self.data
            .chunks_exact(4)
            .filter(|p| *p != [BACKGROUND; 4])
            .count()
    }

    /// RGB channels as an image (background shows as white).
    pub fn rgb_preview(&self) -> RgbImage<f32> {
        let data = self
            .data
            .chunks_exact(4)
            .flat_map(|p| [p[0], p[1], p[2]])
            .collect();
        RgbImage::from_data(self.width, self.height, data).expect("dimensions match")
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 4);
        out.extend_from_slice(RGBD_MAGIC);
        out.push(RGBD_VERSION);
        out.push(if self.depth_normalized {
            FLAG_DEPTH_NORMALIZED
        } else {
            0
        });
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != RGBD_MAGIC {
            return Err(Error::Format("missing RGBD header".into()));
        }
        if bytes[4] != RGBD_VERSION {
            return Err(Error::Format(format!(
                "unsupported RGBD version {}",
                bytes[4]
            )));
        }
        let flags = bytes[5];
        if flags & !(FLAG_DEPTH_NORMALIZED | FLAG_MASK_RESERVED) != 0 {
            return Err(Error::Format(format!("unknown RGBD flags {flags:#04x}")));
        }
        if flags & FLAG_MASK_RESERVED != 0 {
            return Err(Error::Format(
                "RGBD mask channel is reserved and unsupported".into(),
            ));
        }
        let width = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes"));
        let height = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes"));
        if width == 0 || height == 0 {
            return Err(Error::Format("RGBD image has zero size".into()));
        }
        let expected = width as usize * height as usize * 16;
        if bytes.len() - HEADER_LEN != expected {
            return Err(Error::Format(format!(
                "RGBD payload is {} bytes, header implies {expected}",
                bytes.len() - HEADER_LEN
            )));
        }
        let data = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self {
            width,
            height,
            depth_normalized: flags & FLAG_DEPTH_NORMALIZED != 0,
            data,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write_bytes(path, &self.encode())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&read_file(path)?).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Pixel index and depth of a vertex that lands inside the image.
#[inline]
fn locate<T: Real>(cam: &Camera<T>, p: [T; 3]) -> Option<(usize, T)> {
    let proj = cam.project(p)?;
    let (u, v) = (proj.u.floor(), proj.v.floor());
    if !(u >= T::zero() && v >= T::zero()) {
        return None;
    }
    let (x, y) = (u.to_usize()?, v.to_usize()?);
    let (w, h) = (cam.width() as usize, cam.height() as usize);
    if x >= w || y >= h {
        return None;
    }
    Some((y * w + x, proj.depth))
}

/// Splats with positional vertex indices as tie-break ids.
pub fn splat<T: Real>(verts: &ColoredVertexSet<T>, cam: &Camera<T>) -> ProjectionImage {
    splat_impl(verts, None, cam)
}

/// Splats with caller-supplied tie-break ids (e.g. indices before a shuffle).
pub fn splat_with_ids<T: Real>(
    verts: &ColoredVertexSet<T>,
    ids: &[u32],
    cam: &Camera<T>,
) -> Result<ProjectionImage> {
    if ids.len() != verts.len() {
        return Err(Error::param(format!(
            "{} ids for {} vertices",
            ids.len(),
            verts.len()
        )));
    }
    Ok(splat_impl(verts, Some(ids), cam))
}

fn splat_impl<T: Real>(
    verts: &ColoredVertexSet<T>,
    ids: Option<&[u32]>,
    cam: &Camera<T>,
) -> ProjectionImage {
    let (w, h) = (cam.width(), cam.height());
    let positions = verts.positions();
    let located: Vec<Option<(usize, T)>> = if positions.len() >= PARALLEL_PROJECTION_THRESHOLD {
        positions.par_iter().map(|p| locate(cam, *p)).collect()
    } else {
        positions.iter().map(|p| locate(cam, *p)).collect()
    };

    // Per-pixel winner: vertex slot + 1 (0 = empty) and its depth.
    let mut winner = vec![0u32; w as usize * h as usize];
    let mut best = vec![T::zero(); w as usize * h as usize];
    let id_of = |i: usize| ids.map_or(i as u32, |ids| ids[i]);
    for (i, loc) in located.iter().enumerate() {
        let Some((pix, d)) = *loc else { continue };
        let cur = winner[pix];
        let wins =
            cur == 0 || d < best[pix] || (d == best[pix] && id_of(i) < id_of(cur as usize - 1));
        if wins {
            winner[pix] = i as u32 + 1;
            best[pix] = d;
        }
    }

    let mut img = ProjectionImage::background(w, h);
    let colors = verts.colors();
    for (pix, &slot) in winner.iter().enumerate() {
        if slot == 0 {
            continue;
        }
        let c = colors[slot as usize - 1];
        let o = pix * 4;
        img.data[o] = c[0].to_f32_lossy();
        img.data[o + 1] = c[1].to_f32_lossy();
        img.data[o + 2] = c[2].to_f32_lossy();
        img.data[o + 3] = best[pix].to_f32_lossy();
    }
    img
}

/// Largest f32 strictly below one.
const BELOW_ONE: f32 = 1.0 - f32::EPSILON / 2.0;

/// Maps metric depth `d ↦ (d − d_min) / (d_max − d_min)`, clamped to `[0, 1)`.
///
/// Background pixels (all four channels exactly 1) are left untouched, so
/// after normalization a depth of 1 identifies background unambiguously.
/// The range bounds are rounded to `f32` first, matching the precision of
/// the stored depths, so a stored `d_min` maps to exactly 0.
pub fn normalize_depth(img: &ProjectionImage, d_min: f64, d_max: f64) -> Result<ProjectionImage> {
    if !(d_min < d_max) || !d_min.is_finite() || !d_max.is_finite() {
        return Err(Error::param(format!(
            "depth range requires d_min < d_max, got ({d_min}, {d_max})"
        )));
    }
    if img.depth_normalized {
        return Err(Error::param("projection image depth is already normalized"));
    }
    let lo = d_min as f32 as f64;
    let span = d_max as f32 as f64 - lo;
    if !(span > 0.0) {
        return Err(Error::param("depth range collapses at f32 precision"));
    }
    let mut out = img.clone();
    out.depth_normalized = true;
    for px in out.data.chunks_exact_mut(4) {
        if *px == [BACKGROUND; 4] {
            continue;
        }
        let n = ((px[3] as f64 - lo) / span) as f32;
        px[3] = if n.is_nan() {
            0.0
        } else {
            n.clamp(0.0, BELOW_ONE)
        };
    }
    Ok(out)
}
