use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use smplpix::dataset::{build_dataset, camera_rig, synth_subject, DatasetConfig};
use smplpix::mesh::TexCoords;
use smplpix::metrics::PairRecord;
use smplpix::{
    normalize_depth, psnr, rasterize, splat, BodyModel, Camera, ColoredVertexSet, Intrinsics,
    Mesh, PoseParams, PoseSequence, RgbImage, ShapeParams,
};

use crate::{Command, ModelPose};

/// Errors in how the command was invoked rather than in its inputs' content.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AnimateMode {
    Splat,
    Raster,
}

pub fn parse_beta_delta(s: &str) -> std::result::Result<(usize, f64), String> {
    let (i, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected INDEX=VALUE, got '{s}'"))?;
    let i = i.trim().parse().map_err(|_| format!("bad index in '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("bad value in '{s}'"))?;
    if !v.is_finite() {
        return Err(format!("non-finite value in '{s}'"));
    }
    Ok((i, v))
}

pub fn run(command: Command, seed: Option<u64>) -> Result<()> {
    match command {
        Command::Splat { mesh, camera, out, depth_range, preview } => {
            cmd_splat(&mesh, &camera, &out, depth_range.as_deref(), preview.as_deref())
        }
        Command::Rasterize { mesh, camera, out, background } => {
            let mesh = load_mesh(&mesh)?;
            let cam = load_camera(&camera)?;
            if background.len() != 3 {
                return Err(usage("--background takes three values: R,G,B"));
            }
            let bg = [background[0], background[1], background[2]];
            let img = rasterize(&mesh.vertices, &mesh.faces, &cam, bg)?;
            img.cast::<f32>().save(&out)?;
            Ok(())
        }
        Command::Pose { model, out } => {
            let (m, beta, theta) = load_model_pose(&model)?;
            let posed = m.pose_mesh(&beta, &theta)?;
            save_model_mesh(&m, posed, m.template_colors(), &out)
        }
        Command::Unpose { model, registration, out } => {
            let (m, beta, theta) = load_model_pose(&model)?;
            let reg = load_mesh(&registration)?;
            check_vertex_count(&m, reg.vertices.len(), &registration)?;
            let star = m.unpose(&reg.vertices, &beta, &theta)?;
            let (pos, col) = star.into_parts();
            save_model_mesh(&m, pos, col, &out)
        }
        Command::Repose { model, template, out } => {
            let (m, _, theta) = load_model_pose(&model)?;
            let star = load_mesh(&template)?;
            check_vertex_count(&m, star.vertices.len(), &template)?;
            let posed = m.repose_subject(&star.vertices, &theta)?;
            let (pos, col) = posed.into_parts();
            save_model_mesh(&m, pos, col, &out)
        }
        Command::Reshape { model, beta_delta, out } => {
            let (m, beta, theta) = load_model_pose(&model)?;
            let mut b = beta.as_slice().to_vec();
            for (i, v) in beta_delta {
                if i >= b.len() {
                    return Err(usage(format!(
                        "--beta-delta index {i} out of range for {} shape coefficients",
                        b.len()
                    )));
                }
                b[i] += v;
            }
            let posed = m.pose_mesh(&ShapeParams::new(b)?, &theta)?;
            save_model_mesh(&m, posed, m.template_colors(), &out)
        }
        Command::Animate {
            model,
            poses,
            rig,
            template,
            beta,
            radius,
            width,
            height,
            mode,
            overwrite,
            out,
        } => cmd_animate(AnimateArgs {
            model,
            poses,
            rig,
            template,
            beta,
            radius,
            width,
            height,
            mode,
            overwrite,
            out,
        }),
        Command::DatasetGen {
            config,
            subjects,
            cameras_per_subject,
            poses_per_subject,
            image_size,
            clutter,
            png,
            overwrite,
            out,
        } => {
            let mut cfg = match &config {
                Some(p) => DatasetConfig::load(p)?,
                None => DatasetConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = subjects {
                cfg.subjects = n;
            }
            if let Some(n) = cameras_per_subject {
                cfg.cameras_per_subject = n;
            }
            if let Some(n) = poses_per_subject {
                cfg.poses_per_subject = n;
            }
            if let Some(sz) = image_size {
                if sz.len() != 2 {
                    return Err(usage("--image-size takes two values: WIDTH,HEIGHT"));
                }
                cfg.image_size = [sz[0], sz[1]];
            }
            cfg.clutter |= clutter;
            cfg.write_png |= png;
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            let manifest = build_dataset(&cfg, &out, overwrite)?;
            eprintln!(
                "wrote {} pairs for {} subjects to {}",
                manifest.entries.len(),
                manifest.split.len(),
                out.display()
            );
            println!("{}", out.join(smplpix::dataset::MANIFEST_FILE).display());
            Ok(())
        }
        Command::SynthModel { out, scale, mesh } => {
            let subject = synth_subject(seed.unwrap_or(0))?;
            let model = subject.model.scaled(scale)?;
            model.save(&out)?;
            if let Some(path) = mesh {
                save_model_mesh(&model, model.template().to_vec(), model.template_colors(), &path)?;
            }
            Ok(())
        }
        Command::Metrics { images, out } => cmd_metrics(&images, out.as_deref()),
    }
}

fn load_mesh(path: &Path) -> Result<Mesh> {
    Mesh::load(path).with_context(|| format!("loading mesh {}", path.display()))
}

fn load_camera(path: &Path) -> Result<Camera> {
    Camera::load(path).with_context(|| format!("loading camera {}", path.display()))
}

fn check_vertex_count(model: &BodyModel, n: usize, path: &Path) -> Result<()> {
    if n != model.num_vertices() {
        bail!(
            "{} has {n} vertices, the model has {}",
            path.display(),
            model.num_vertices()
        );
    }
    Ok(())
}

fn model_beta(model: &BodyModel, beta: &[f64]) -> Result<ShapeParams<f64>> {
    if beta.len() > model.num_shape() {
        return Err(usage(format!(
            "--beta has {} values, the model has {} shape coefficients",
            beta.len(),
            model.num_shape()
        )));
    }
    let mut b = beta.to_vec();
    b.resize(model.num_shape(), 0.0);
    Ok(ShapeParams::new(b)?)
}

fn load_frames(path: &Path, model: &BodyModel) -> Result<Vec<PoseParams<f64>>> {
    let seq = PoseSequence::<f64>::load(path)
        .with_context(|| format!("loading poses {}", path.display()))?;
    if seq.is_empty() {
        bail!("{} contains no frames", path.display());
    }
    for (i, f) in seq.frames.iter().enumerate() {
        if f.num_joints() != model.num_joints() {
            bail!(
                "{} frame {i} has {} joints, the model has {}",
                path.display(),
                f.num_joints(),
                model.num_joints()
            );
        }
    }
    Ok(seq.frames)
}

fn load_model_pose(args: &ModelPose) -> Result<(BodyModel, ShapeParams<f64>, PoseParams<f64>)> {
    let model = BodyModel::load(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let beta = model_beta(&model, &args.beta)?;
    let theta = match &args.pose {
        Some(p) => {
            let frames = load_frames(p, &model)?;
            frames.get(args.frame).cloned().ok_or_else(|| {
                usage(format!("--frame {} but the pose file has {} frames", args.frame, frames.len()))
            })?
        }
        None => PoseParams::zeros(model.num_joints()),
    };
    Ok((model, beta, theta))
}

fn save_model_mesh(
    model: &BodyModel,
    positions: Vec<[f64; 3]>,
    colors: Vec<[f64; 3]>,
    out: &Path,
) -> Result<()> {
    let mut mesh = Mesh::new(ColoredVertexSet::new(positions, colors)?, model.faces().to_vec())?;
    mesh.uv = model.uv().map(|uv| TexCoords::PerVertex(uv.to_vec()));
    mesh.save(out)?;
    Ok(())
}

fn cmd_splat(
    mesh: &Path,
    camera: &Path,
    out: &Path,
    depth_range: Option<&[f64]>,
    preview: Option<&Path>,
) -> Result<()> {
    let mesh = load_mesh(mesh)?;
    let cam = load_camera(camera)?;
    let mut img = splat(&mesh.vertices, &cam);
    if let Some(r) = depth_range {
        if r.len() != 2 {
            return Err(usage("--depth-range takes two values: MIN,MAX"));
        }
        img = normalize_depth(&img, r[0], r[1]).map_err(|e| usage(e.to_string()))?;
    }
    img.save(out)?;
    if let Some(p) = preview {
        img.rgb_preview().save(p)?;
    }
    Ok(())
}

pub struct AnimateArgs {
    model: PathBuf,
    poses: PathBuf,
    rig: usize,
    template: Option<PathBuf>,
    beta: Vec<f64>,
    radius: Option<f64>,
    width: u32,
    height: u32,
    mode: AnimateMode,
    overwrite: bool,
    out: PathBuf,
}

fn bounding_sphere(points: &[[f64; 3]]) -> ([f64; 3], f64) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let c = [0, 1, 2].map(|k| 0.5 * (lo[k] + hi[k]));
    let r = points
        .iter()
        .map(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    (c, r)
}

/// Runs `write` into a staging directory next to `out` and moves it into
/// place only if every file was written.
fn staged_dir(out: &Path, overwrite: bool, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    if out.exists() && !overwrite && fs::read_dir(out)?.next().is_some() {
        return Err(usage(format!(
            "output directory {} is not empty (use --overwrite)",
            out.display()
        )));
    }
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stage = out.with_file_name(format!(".{name}.partial{}", std::process::id()));
    if stage.exists() {
        fs::remove_dir_all(&stage)?;
    }
    fs::create_dir_all(&stage)?;
    if let Err(e) = write(&stage) {
        let _ = fs::remove_dir_all(&stage);
        return Err(e);
    }
    if out.exists() {
        fs::remove_dir_all(out)?;
    }
    fs::rename(&stage, out).with_context(|| format!("moving output into {}", out.display()))?;
    Ok(())
}

fn cmd_animate(a: AnimateArgs) -> Result<()> {
    use rayon::prelude::*;

    if a.rig == 0 {
        return Err(usage("--rig must be at least 1"));
    }
    let model = BodyModel::load(&a.model)
        .with_context(|| format!("loading model {}", a.model.display()))?;
    let frames = load_frames(&a.poses, &model)?;
    let rest = match &a.template {
        Some(p) => {
            let m = load_mesh(p)?;
            check_vertex_count(&model, m.vertices.len(), p)?;
            m.vertices
        }
        None => {
            let beta = model_beta(&model, &a.beta)?;
            ColoredVertexSet::new(model.shaped_template(&beta)?, model.template_colors())?
        }
    };

    let (center, rho) = bounding_sphere(rest.positions());
    let radius = a.radius.unwrap_or(2.5 * rho.max(1e-6));
    let half = (rho / radius).clamp(1e-3, 0.95).asin();
    let f = 0.5 * a.width.min(a.height) as f64 / half.tan();
    let intr = Intrinsics { fx: f, fy: f, cx: 0.5 * a.width as f64, cy: 0.5 * a.height as f64 };
    let cams = camera_rig(a.rig, radius, center, intr, a.width, a.height)?;

    staged_dir(&a.out, a.overwrite, |stage| {
        for (c, cam) in cams.iter().enumerate() {
            cam.save(&stage.join("cameras").join(format!("cam_{c:03}.json")))?;
        }
        frames.par_iter().enumerate().try_for_each(|(i, theta)| -> Result<()> {
            let posed = model.repose_subject(&rest, theta)?;
            for (c, cam) in cams.iter().enumerate() {
                let stem = format!("frame_{i:04}_cam_{c:03}");
                match a.mode {
                    AnimateMode::Splat => splat(&posed, cam).save(&stage.join(format!("{stem}.rgbd")))?,
                    AnimateMode::Raster => rasterize(&posed, model.faces(), cam, [1.0; 3])?
                        .cast::<f32>()
                        .save(&stage.join(format!("{stem}.png")))?,
                }
            }
            Ok(())
        })
    })?;
    eprintln!("wrote {} images to {}", frames.len() * cams.len(), a.out.display());
    Ok(())
}

fn load_image(path: &Path) -> Result<RgbImage<f64>> {
    Ok(RgbImage::<f32>::load(path)
        .with_context(|| format!("loading image {}", path.display()))?
        .cast())
}

fn cmd_metrics(images: &[PathBuf], out: Option<&Path>) -> Result<()> {
    if !images.len().is_multiple_of(2) {
        return Err(usage("metrics expects image pairs: A B [A B ...]"));
    }
    let mut lines = String::new();
    for pair in images.chunks_exact(2) {
        let a = load_image(&pair[0])?;
        let b = load_image(&pair[1])?;
        let report = psnr(&a, &b)
            .with_context(|| format!("comparing {} and {}", pair[0].display(), pair[1].display()))?;
        let rec = PairRecord {
            pair: [pair[0].display().to_string(), pair[1].display().to_string()],
            psnr_db: report.psnr_db,
            mse: report.mse,
        };
        lines.push_str(&serde_json::to_string(&rec)?);
        lines.push('\n');
    }
    match out {
        Some(p) => {
            let tmp = p.with_extension("tmp");
            fs::write(&tmp, &lines).with_context(|| format!("writing {}", tmp.display()))?;
            fs::rename(&tmp, p).with_context(|| format!("writing {}", p.display()))?;
        }
        None => print!("{lines}"),
    }
    Ok(())
}
