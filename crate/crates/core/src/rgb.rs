//! Three-channel float images and their `IMGF` / PNG encodings.
//!
//! `IMGF` mirrors the projection-image container with three channels:
//! `"IMGF"`, `u8 version = 1`, `u8 flags = 0`, `u32 width`, `u32 height`,
//! then `height · width · 3` little-endian `f32`, row-major, interleaved RGB.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io_util::{atomic_write, atomic_write_bytes, read_file};
use crate::scalar::Real;

pub const IMGF_MAGIC: &[u8; 4] = b"IMGF";
pub const IMGF_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 1 + 4 + 4;

/// Row-major interleaved RGB image.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage<T> {
    width: u32,
    height: u32,
    data: Vec<T>,
}

/// Rendered output image, values in `[0, 1]`.
pub type RasterImage<T> = RgbImage<T>;
/// Texture used for per-vertex color sampling, values in `[0, 1]`.
pub type TextureImage<T> = RgbImage<T>;

impl<T: Real> RgbImage<T> {
    pub fn filled(width: u32, height: u32, color: [T; 3]) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&color);
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Takes ownership of interleaved RGB data; values are clamped to `[0, 1]`.
    pub fn from_data(width: u32, height: u32, mut data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("image dimensions must be positive"));
        }
        if data.len() != width as usize * height as usize * 3 {
            return Err(Error::param(format!(
                "{}x{} RGB image needs {} values, got {}",
                width,
                height,
                width as usize * height as usize * 3,
                data.len()
            )));
        }
        for x in &mut data {
            *x = if x.is_nan() {
                T::zero()
            } else {
                x.max(T::zero()).min(T::one())
            };
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [T; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [T; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        for k in 0..3 {
            self.data[i + k] = rgb[k].max(T::zero()).min(T::one());
        }
    }

    pub fn cast<U: Real>(&self) -> RgbImage<U> {
        RgbImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|x| U::lit(x.to_f64_lossy())).collect(),
        }
    }

    pub fn encode_imgf(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 4);
        out.extend_from_slice(IMGF_MAGIC);
        out.push(IMGF_VERSION);
        out.push(0);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_f32_lossy().to_le_bytes());
        }
        out
    }

    pub fn decode_imgf(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != IMGF_MAGIC {
            return Err(Error::Format("missing IMGF header".into()));
        }
        if bytes[4] != IMGF_VERSION {
            return Err(Error::Format(format!(
                "unsupported IMGF version {}",
                bytes[4]
            )));
        }
        let width = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes"));
        let height = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes"));
        let expected = width as usize * height as usize * 3 * 4;
        if bytes.len() - HEADER_LEN != expected {
            return Err(Error::Format(format!(
                "IMGF payload is {} bytes, header implies {expected}",
                bytes.len() - HEADER_LEN
            )));
        }
        let data = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| T::from_f32_exact(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        Self::from_data(width, height, data)
    }

    /// 8-bit RGB with `round(255 · v)` (halves rounded up).
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }

    pub fn from_rgb8(width: u32, height: u32, bytes: &[u8]) -> Result<Self> {
        let scale = T::one() / T::lit(255.0);
        Self::from_data(
            width,
            height,
            bytes.iter().map(|&b| T::lit(b as f64) * scale).collect(),
        )
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let buf = image::RgbImage::from_raw(self.width, self.height, self.to_rgb8())
            .expect("buffer size matches dimensions");
        atomic_write(path, |w| {
            buf.write_to(w, image::ImageFormat::Png)
                .map_err(std::io::Error::other)
        })
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)?.to_rgb8();
        let (w, h) = img.dimensions();
        Self::from_rgb8(w, h, img.as_raw())
    }

    pub fn save_imgf(&self, path: &Path) -> Result<()> {
        atomic_write_bytes(path, &self.encode_imgf())
    }

    pub fn load_imgf(path: &Path) -> Result<Self> {
        Self::decode_imgf(&read_file(path)?)
    }

    /// Dispatches on the extension: `.png` or `.imgf`.
    pub fn load(path: &Path) -> Result<Self> {
        match extension(path).as_str() {
            "png" => Self::load_png(path),
            "imgf" => Self::load_imgf(path),
            other => Err(Error::Format(format!(
                "unsupported image extension '{other}' for {}",
                path.display()
            ))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match extension(path).as_str() {
            "png" => self.save_png(path),
            "imgf" => self.save_imgf(path),
            other => Err(Error::Format(format!(
                "unsupported image extension '{other}' for {}",
                path.display()
            ))),
        }
    }
}

pub(crate) fn extension(path: &Path) -> String {
    path.extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default()
}

/// `[0, 1]` → byte with round-half-up.
#[inline]
pub fn quantize<T: Real>(v: T) -> u8 {
    let v = v.to_f64_lossy();
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * 255.0 + 0.5).floor() as u8
}
