//! Peak signal-to-noise ratio on `[0, 1]` images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rgb::RgbImage;
use crate::scalar::Real;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub mse: f64,
    pub n_pixels: usize,
}

/// One line of the JSON-lines metric output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair: [String; 2],
    pub psnr_db: f64,
    pub mse: f64,
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_CAP_DB
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

/// Full-frame PSNR with peak value 1.
pub fn psnr<T: Real>(a: &RgbImage<T>, b: &RgbImage<T>) -> Result<MetricReport> {
    psnr_masked(a, b, None)
}

/// PSNR over the pixels where `mask` is true (row-major, one flag per pixel).
pub fn psnr_masked<T: Real>(
    a: &RgbImage<T>,
    b: &RgbImage<T>,
    mask: Option<&[bool]>,
) -> Result<MetricReport> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::param(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let n = a.width() as usize * a.height() as usize;
    if let Some(m) = mask {
        if m.len() != n {
            return Err(Error::param(format!(
                "mask has {} entries for {n} pixels",
                m.len()
            )));
        }
    }
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for (i, (pa, pb)) in a
        .data()
        .chunks_exact(3)
        .zip(b.data().chunks_exact(3))
        .enumerate()
    {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        for k in 0..3 {
            let d = pa[k].to_f64_lossy() - pb[k].to_f64_lossy();
            sum += d * d;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::param("mask selects no pixels"));
    }
    let mse = sum / (3 * count) as f64;
    Ok(MetricReport {
        psnr_db: psnr_from_mse(mse),
        mse,
        n_pixels: count,
    })
}
