//! Paired training-data generation and the dataset manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rig::camera_rig;
use super::synth::{perturbed_a_pose, synth_subject};
use crate::body_model::{BodyModel, ColoredVertexSet, PoseParams, PoseSequence, ShapeParams};
use crate::camera::{Camera, Intrinsics};
use crate::error::{Error, Result};
use crate::io_util::{atomic_write_bytes, read_file};
use crate::linalg::Vec3;
use crate::raster::rasterize;
use crate::rgb::RgbImage;
use crate::splat::{normalize_depth, splat, ProjectionImage};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Nominal standing height of a synthetic subject before `subject_scale`.
const NOMINAL_HEIGHT: f64 = 1.8;

fn default_seed() -> u64 {
    0
}
fn default_subjects() -> usize {
    10
}
fn default_cameras() -> usize {
    20
}
fn default_rig_size() -> usize {
    137
}
fn default_rig_radius() -> f64 {
    0.4
}
fn default_poses() -> usize {
    1
}
fn default_pose_noise() -> f64 {
    0.05
}
fn default_shape_spread() -> f64 {
    1.0
}
fn default_image_size() -> [u32; 2] {
    [308, 410]
}
fn default_depth_range() -> [f64; 2] {
    [0.1, 0.7]
}
fn default_train_ratio() -> f64 {
    0.8
}
fn default_background() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}
fn default_subject_scale() -> f64 {
    0.25
}

/// Dataset generation settings; every field has a default so `{}` is a
/// valid config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_subjects")]
    pub subjects: usize,
    #[serde(default = "default_cameras")]
    pub cameras_per_subject: usize,
    #[serde(default = "default_rig_size")]
    pub rig_size: usize,
    #[serde(default = "default_rig_radius")]
    pub rig_radius: f64,
    #[serde(default = "default_poses")]
    pub poses_per_subject: usize,
    /// Uniform half-width (radians) of the perturbation around A-pose.
    #[serde(default = "default_pose_noise")]
    pub pose_noise: f64,
    /// Optional pose-sequence file; pose `p` of every subject is frame
    /// `p mod len`. Relative paths resolve against the working directory.
    #[serde(default)]
    pub pose_file: Option<PathBuf>,
    /// Half-width of the uniform draw for each shape coefficient.
    #[serde(default = "default_shape_spread")]
    pub shape_spread: f64,
    /// `[width, height]` in pixels.
    #[serde(default = "default_image_size")]
    pub image_size: [u32; 2],
    /// Focal length in pixels; derived from the rig geometry when absent.
    #[serde(default)]
    pub focal_px: Option<f64>,
    #[serde(default = "default_depth_range")]
    pub depth_range: [f64; 2],
    #[serde(default = "default_train_ratio")]
    pub train_ratio: f64,
    #[serde(default = "default_background")]
    pub background: [f64; 3],
    /// Adds geometry to the ground truth that the projection image lacks.
    #[serde(default)]
    pub clutter: bool,
    /// Also write PNG previews of the ground truth.
    #[serde(default)]
    pub write_png: bool,
    /// Uniform scale applied to the human-sized synthetic subjects.
    #[serde(default = "default_subject_scale")]
    pub subject_scale: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl DatasetConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let [w, h] = self.image_size;
        let [d0, d1] = self.depth_range;
        let checks: [(bool, &str); 11] = [
            (self.subjects >= 1, "subjects must be at least 1"),
            (
                self.cameras_per_subject >= 1,
                "cameras_per_subject must be at least 1",
            ),
            (
                self.poses_per_subject >= 1,
                "poses_per_subject must be at least 1",
            ),
            (
                self.cameras_per_subject <= self.rig_size,
                "cameras_per_subject exceeds rig_size",
            ),
            (
                self.rig_radius > 0.0 && self.rig_radius.is_finite(),
                "rig_radius must be positive",
            ),
            (w >= 1 && h >= 1, "image_size must be positive"),
            (
                d0.is_finite() && d1.is_finite() && d0 < d1,
                "depth_range must satisfy d_min < d_max",
            ),
            (
                (0.0..=1.0).contains(&self.train_ratio),
                "train_ratio must lie in [0, 1]",
            ),
            (
                self.pose_noise >= 0.0 && self.pose_noise.is_finite(),
                "pose_noise must be >= 0",
            ),
            (
                self.subject_scale > 0.0 && self.subject_scale.is_finite(),
                "subject_scale must be positive",
            ),
            (
                self.focal_px.is_none_or(|f| f > 0.0 && f.is_finite()),
                "focal_px must be positive",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::param(msg));
            }
        }
        if !(self.shape_spread >= 0.0 && self.shape_spread.is_finite()) {
            return Err(Error::param("shape_spread must be >= 0"));
        }
        Ok(())
    }

    /// Point the rig looks at: mid-height of the scaled subject.
    pub fn rig_target(&self) -> Vec3<f64> {
        [0.0, 0.5 * NOMINAL_HEIGHT * self.subject_scale, 0.0]
    }

    pub fn intrinsics(&self) -> Intrinsics<f64> {
        let [w, h] = self.image_size;
        let f = self.focal_px.unwrap_or_else(|| {
            // Fit a sphere around the subject (with arms) into the shorter
            // image side from every rig position.
            let rho = 0.55 * NOMINAL_HEIGHT * self.subject_scale;
            let half = (rho / self.rig_radius).min(0.95).asin();
            0.5 * w.min(h) as f64 / half.tan()
        });
        Intrinsics {
            fx: f,
            fy: f,
            cx: 0.5 * w as f64,
            cy: 0.5 * h as f64,
        }
    }

    pub fn rig(&self) -> Result<Vec<Camera<f64>>> {
        let [w, h] = self.image_size;
        camera_rig(
            self.rig_size,
            self.rig_radius,
            self.rig_target(),
            self.intrinsics(),
            w,
            h,
        )
    }

    /// Number of training subjects: `round(train_ratio · subjects)`.
    pub fn train_count(&self) -> usize {
        (self.train_ratio * self.subjects as f64).round() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub camera_id: String,
    pub pose_id: String,
    pub projection_path: String,
    pub ground_truth_path: String,
    pub camera_path: String,
}

/// Index of the training pairs; paths are relative to the manifest file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub split: BTreeMap<String, Split>,
    pub depth_range: [f64; 2],
    /// `[width, height]`.
    pub image_size: [u32; 2],
}

impl DatasetManifest {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    /// Checks the structural invariants: every entry's subject has a split,
    /// and no entry references an unknown subject.
    pub fn check_split(&self) -> Result<()> {
        for e in &self.entries {
            if !self.split.contains_key(&e.subject_id) {
                return Err(Error::Format(format!(
                    "subject {} has no split",
                    e.subject_id
                )));
            }
        }
        Ok(())
    }

    pub fn subjects_in(&self, split: Split) -> Vec<&str> {
        self.split
            .iter()
            .filter(|(_, s)| **s == split)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

pub fn subject_id(s: usize) -> String {
    format!("subject_{s:04}")
}

pub fn pose_id(p: usize) -> String {
    format!("pose_{p:03}")
}

pub fn camera_id(c: usize) -> String {
    format!("cam_{c:03}")
}

/// Independent seed for item `index` of stream `stream`.
fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

const STREAM_SUBJECT: u64 = 1;
const STREAM_POSE: u64 = 2;
const STREAM_CAMERAS: u64 = 3;
const STREAM_SPLIT: u64 = 4;
const STREAM_CLUTTER: u64 = 5;

/// Body model of subject `s`, already scaled into the rig.
pub fn subject_model(config: &DatasetConfig, s: usize) -> Result<BodyModel<f64>> {
    let subject = synth_subject(derive_seed(config.seed, STREAM_SUBJECT, s as u64))?;
    subject.model.scaled(config.subject_scale)
}

/// Shape and pose used for pose `p` of subject `s`.
pub fn subject_pose(
    config: &DatasetConfig,
    model: &BodyModel<f64>,
    s: usize,
    p: usize,
    sequence: Option<&PoseSequence<f64>>,
) -> Result<(ShapeParams<f64>, PoseParams<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        config.seed,
        STREAM_POSE,
        (s as u64) << 20 | p as u64,
    ));
    let beta: Vec<f64> = (0..model.num_shape())
        .map(|_| config.shape_spread * rng.gen_range(-1.0..=1.0))
        .collect();
    let theta = match sequence {
        Some(seq) if !seq.is_empty() => {
            let frame = seq.frames[p % seq.len()].clone();
            if frame.num_joints() != model.num_joints() {
                return Err(Error::param(format!(
                    "pose file frames have {} joints, model has {}",
                    frame.num_joints(),
                    model.num_joints()
                )));
            }
            frame
        }
        _ => perturbed_a_pose(model.num_joints(), config.pose_noise, &mut rng),
    };
    Ok((ShapeParams::new(beta)?, theta))
}

/// Posed colored vertices and faces of one (subject, pose).
#[derive(Clone, Debug)]
pub struct EntryGeometry {
    pub vertices: ColoredVertexSet<f64>,
    pub faces: Vec<[u32; 3]>,
}

pub fn entry_geometry(
    config: &DatasetConfig,
    model: &BodyModel<f64>,
    s: usize,
    p: usize,
    sequence: Option<&PoseSequence<f64>>,
) -> Result<EntryGeometry> {
    let (beta, theta) = subject_pose(config, model, s, p, sequence)?;
    let posed = model.pose_mesh(&beta, &theta)?;
    Ok(EntryGeometry {
        vertices: ColoredVertexSet::new(posed, model.template_colors())?,
        faces: model.faces().to_vec(),
    })
}

/// Rig indices used by subject `s`, in increasing order.
pub fn subject_cameras(config: &DatasetConfig, s: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_CAMERAS, s as u64));
    let mut idx = sample(&mut rng, config.rig_size, config.cameras_per_subject).into_vec();
    idx.sort_unstable();
    idx
}

/// Subject split: a seeded permutation, first `train_count` are training.
pub fn subject_split(config: &DatasetConfig) -> BTreeMap<String, Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_SPLIT, 0));
    let order = sample(&mut rng, config.subjects, config.subjects).into_vec();
    let n_train = config.train_count();
    order
        .into_iter()
        .enumerate()
        .map(|(rank, s)| {
            (
                subject_id(s),
                if rank < n_train {
                    Split::Train
                } else {
                    Split::Test
                },
            )
        })
        .collect()
}

/// A closed lat-long sphere used as off-body clutter.
fn clutter_blob(center: Vec3<f64>, radius: f64, color: Vec3<f64>) -> EntryGeometry {
    const LAT: usize = 6;
    const LON: usize = 10;
    let mut pos = vec![[center[0], center[1] + radius, center[2]]];
    for i in 1..LAT {
        let th = std::f64::consts::PI * i as f64 / LAT as f64;
        for j in 0..LON {
            let ph = std::f64::consts::TAU * j as f64 / LON as f64;
            pos.push([
                center[0] + radius * th.sin() * ph.cos(),
                center[1] + radius * th.cos(),
                center[2] + radius * th.sin() * ph.sin(),
            ]);
        }
    }
    pos.push([center[0], center[1] - radius, center[2]]);
    let bottom = (pos.len() - 1) as u32;
    let ring = |i: usize, j: usize| (1 + (i - 1) * LON + j % LON) as u32;
    let mut faces = Vec::new();
    for j in 0..LON {
        faces.push([0, ring(1, j + 1), ring(1, j)]);
        faces.push([bottom, ring(LAT - 1, j), ring(LAT - 1, j + 1)]);
    }
    for i in 1..LAT - 1 {
        for j in 0..LON {
            faces.push([ring(i, j), ring(i, j + 1), ring(i + 1, j + 1)]);
            faces.push([ring(i, j), ring(i + 1, j + 1), ring(i + 1, j)]);
        }
    }
    let n = pos.len();
    EntryGeometry {
        vertices: ColoredVertexSet::new(pos, vec![color; n]).expect("finite blob"),
        faces,
    }
}

/// Ground-truth geometry: the body, plus clutter when enabled.
pub fn ground_truth_geometry(
    config: &DatasetConfig,
    body: &EntryGeometry,
    s: usize,
    p: usize,
) -> Result<EntryGeometry> {
    if !config.clutter {
        return Ok(body.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        config.seed,
        STREAM_CLUTTER,
        (s as u64) << 20 | p as u64,
    ));
    let top =
        body.vertices
            .positions()
            .iter()
            .copied()
            .fold([0.0, f64::NEG_INFINITY, 0.0], |a, b| {
                if b[1] > a[1] {
                    b
                } else {
                    a
                }
            });
    let r = 0.05 * NOMINAL_HEIGHT * config.subject_scale * rng.gen_range(0.7..1.3);
    let center = [top[0], top[1] - 0.3 * r, top[2] + 0.6 * r];
    let color = [
        rng.gen_range(0.0..0.4),
        rng.gen_range(0.0..0.3),
        rng.gen_range(0.0..0.2),
    ];
    let blob = clutter_blob(center, r, color);

    let offset = body.vertices.len() as u32;
    let (mut pos, mut col) = body.vertices.clone().into_parts();
    let (bp, bc) = blob.vertices.into_parts();
    pos.extend(bp);
    col.extend(bc);
    let mut faces = body.faces.clone();
    faces.extend(blob.faces.iter().map(|f| f.map(|i| i + offset)));
    Ok(EntryGeometry {
        vertices: ColoredVertexSet::new(pos, col)?,
        faces,
    })
}

struct EntryFiles {
    projection: Vec<u8>,
    ground_truth: Vec<u8>,
    png: Option<RgbImage<f32>>,
}

fn render_entry(
    config: &DatasetConfig,
    body: &EntryGeometry,
    gt: &EntryGeometry,
    cam: &Camera<f64>,
) -> Result<EntryFiles> {
    let [d0, d1] = config.depth_range;
    let projection = normalize_depth(&splat(&body.vertices, cam), d0, d1)?;
    let raster = rasterize(&gt.vertices, &gt.faces, cam, config.background)?.cast::<f32>();
    Ok(EntryFiles {
        projection: projection.encode(),
        ground_truth: raster.encode_imgf(),
        png: config.write_png.then_some(raster),
    })
}

fn staging_dir(out: &Path) -> PathBuf {
    let name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    out.with_file_name(format!(".{name}.partial{}", std::process::id()))
}

fn dir_is_empty(path: &Path) -> Result<bool> {
    Ok(fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .next()
        .is_none())
}

/// Generates the full dataset under `out`. Output is assembled in a sibling
/// staging directory and moved into place only on success. An existing
/// non-empty `out` is replaced only when `overwrite` is set.
///
/// Work is distributed on the current rayon pool; results do not depend on
/// the number of threads.
pub fn build_dataset(
    config: &DatasetConfig,
    out: &Path,
    overwrite: bool,
) -> Result<DatasetManifest> {
    config.validate()?;
    if out.exists() && !overwrite && !dir_is_empty(out)? {
        return Err(Error::param(format!(
            "output directory {} exists and is not empty",
            out.display()
        )));
    }
    let sequence = config
        .pose_file
        .as_deref()
        .map(PoseSequence::<f64>::load)
        .transpose()?;
    let rig = config.rig()?;

    let stage = staging_dir(out);
    if stage.exists() {
        fs::remove_dir_all(&stage).map_err(|e| Error::io(&stage, e))?;
    }
    let result = write_tree(config, &stage, &rig, sequence.as_ref());
    let manifest = match result {
        Ok(m) => m,
        Err(e) => {
            let _ = fs::remove_dir_all(&stage);
            return Err(e);
        }
    };
    if out.exists() {
        fs::remove_dir_all(out).map_err(|e| Error::io(out, e))?;
    }
    fs::rename(&stage, out).map_err(|e| Error::io(out, e))?;
    Ok(manifest)
}

fn write_tree(
    config: &DatasetConfig,
    root: &Path,
    rig: &[Camera<f64>],
    sequence: Option<&PoseSequence<f64>>,
) -> Result<DatasetManifest> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let cameras_used: Vec<Vec<usize>> = (0..config.subjects)
        .map(|s| subject_cameras(config, s))
        .collect();
    let mut all_used: Vec<usize> = cameras_used.iter().flatten().copied().collect();
    all_used.sort_unstable();
    all_used.dedup();
    for &c in &all_used {
        rig[c].save(&root.join("cameras").join(format!("{}.json", camera_id(c))))?;
    }

    let jobs: Vec<(usize, usize)> = (0..config.subjects)
        .flat_map(|s| (0..config.poses_per_subject).map(move |p| (s, p)))
        .collect();
    let models: Vec<BodyModel<f64>> = (0..config.subjects)
        .into_par_iter()
        .map(|s| subject_model(config, s))
        .collect::<Result<_>>()?;
    models.par_iter().enumerate().try_for_each(|(s, m)| {
        m.save(&root.join("models").join(format!("{}.bsm1", subject_id(s))))
    })?;

    let entries: Vec<Vec<ManifestEntry>> = jobs
        .par_iter()
        .map(|&(s, p)| -> Result<Vec<ManifestEntry>> {
            let model = &models[s];
            let body = entry_geometry(config, model, s, p, sequence)?;
            let gt = ground_truth_geometry(config, &body, s, p)?;
            cameras_used[s]
                .par_iter()
                .map(|&c| {
                    let stem = format!("{}_{}_{}", subject_id(s), pose_id(p), camera_id(c));
                    let files = render_entry(config, &body, &gt, &rig[c])?;
                    let proj_rel = format!("projections/{stem}.rgbd");
                    let gt_rel = format!("ground_truth/{stem}.imgf");
                    atomic_write_bytes(&root.join(&proj_rel), &files.projection)?;
                    atomic_write_bytes(&root.join(&gt_rel), &files.ground_truth)?;
                    if let Some(png) = files.png {
                        png.save_png(&root.join(format!("ground_truth/{stem}.png")))?;
                    }
                    Ok(ManifestEntry {
                        subject_id: subject_id(s),
                        camera_id: camera_id(c),
                        pose_id: pose_id(p),
                        projection_path: proj_rel,
                        ground_truth_path: gt_rel,
                        camera_path: format!("cameras/{}.json", camera_id(c)),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let manifest = DatasetManifest {
        entries: entries.into_iter().flatten().collect(),
        split: subject_split(config),
        depth_range: config.depth_range,
        image_size: config.image_size,
    };
    atomic_write_bytes(
        &root.join("config.json"),
        serde_json::to_string_pretty(config)?.as_bytes(),
    )?;
    atomic_write_bytes(
        &root.join(MANIFEST_FILE),
        manifest.to_json_string().as_bytes(),
    )?;
    Ok(manifest)
}

/// Summary returned by [`validate_dataset`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetReport {
    pub entries: usize,
    pub train_subjects: usize,
    pub test_subjects: usize,
}

/// Loads `dir/manifest.json` and checks every entry: files exist and
/// decode, dimensions agree with the camera and the manifest, depth is
/// normalized, and each subject belongs to exactly one split.
pub fn validate_dataset(dir: &Path) -> Result<DatasetReport> {
    let manifest = DatasetManifest::load(&dir.join(MANIFEST_FILE))?;
    manifest.check_split()?;
    let [w, h] = manifest.image_size;
    for e in &manifest.entries {
        let cam = Camera::<f64>::load(&dir.join(&e.camera_path))?;
        let proj = ProjectionImage::load(&dir.join(&e.projection_path))?;
        let gt = RgbImage::<f32>::load(&dir.join(&e.ground_truth_path))?;
        let dims = [
            (cam.width(), cam.height()),
            (proj.width(), proj.height()),
            (gt.width(), gt.height()),
        ];
        if dims.iter().any(|&d| d != (w, h)) {
            return Err(Error::Format(format!(
                "entry {} has dimensions {dims:?}, manifest says {w}x{h}",
                e.projection_path
            )));
        }
        if !proj.is_depth_normalized() {
            return Err(Error::Format(format!(
                "{} is not depth-normalized",
                e.projection_path
            )));
        }
    }
    Ok(DatasetReport {
        entries: manifest.entries.len(),
        train_subjects: manifest.subjects_in(Split::Train).len(),
        test_subjects: manifest.subjects_in(Split::Test).len(),
    })
}
