//! Geometry engine and dataset factory for projection-image based human
//! rendering: a blend-skinned body model, pinhole cameras, sparse RGB-D
//! splatting, a reference rasterizer, mesh utilities and metrics.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); aliases for
//! both precisions are provided at the crate root.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod body_model;
pub mod camera;
pub mod dataset;
pub mod error;
mod io_util;
pub mod linalg;
pub mod mesh;
pub mod metrics;
pub mod raster;
pub mod rgb;
pub mod scalar;
pub mod splat;

pub use body_model::{PoseParams, PoseSequence, ShapeParams};
pub use camera::{Intrinsics, Projection, NEAR_EPSILON};
pub use error::{Error, Result};
pub use metrics::{psnr, psnr_masked, MetricReport, PSNR_CAP_DB};
pub use raster::{coverage_mask, rasterize};
pub use rgb::{RasterImage, RgbImage, TextureImage};
pub use scalar::Real;
pub use splat::{normalize_depth, splat, splat_with_ids, ProjectionImage};

pub type BodyModel = body_model::BodyModel<f64>;
pub type BodyModelF32 = body_model::BodyModel<f32>;
pub type ColoredVertexSet = body_model::ColoredVertexSet<f64>;
pub type ColoredVertexSetF32 = body_model::ColoredVertexSet<f32>;
pub type Camera = camera::Camera<f64>;
pub type CameraF32 = camera::Camera<f32>;
pub type Mesh = mesh::Mesh<f64>;
pub type MeshF32 = mesh::Mesh<f32>;
pub type Image = rgb::RgbImage<f32>;
