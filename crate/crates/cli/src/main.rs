//! `smplpix` command-line entry point.
//!
//! Exit status: 0 on success, 2 on usage errors, 1 on runtime errors.
//! Diagnostics go to stderr; machine-readable results to files or stdout.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "smplpix", version, about = "Body-model posing, RGB-D splatting and dataset generation")]
struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, env = "SMPLPIX_THREADS", default_value_t = 0)]
    threads: usize,
    /// Seed for commands with randomness; overrides a config file's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ModelPose {
    /// Body model (.bsm1).
    #[arg(long)]
    pub model: PathBuf,
    /// Pose file: JSON array of frames, each 3·J radians.
    #[arg(long)]
    pub pose: Option<PathBuf>,
    /// Frame of the pose file to use.
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    /// Shape coefficients, comma separated; missing entries are zero.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub beta: Vec<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Project colored vertices into a sparse RGB-D projection image.
    Splat {
        /// Colored mesh or point set (.obj / .ply).
        #[arg(long)]
        mesh: PathBuf,
        /// Camera JSON.
        #[arg(long)]
        camera: PathBuf,
        /// Output projection image (.rgbd).
        #[arg(long)]
        out: PathBuf,
        /// Normalize depth to this range in meters: D_MIN,D_MAX.
        #[arg(long, value_delimiter = ',', num_args = 1..=2)]
        depth_range: Option<Vec<f64>>,
        /// Also write an RGB preview (.png or .imgf).
        #[arg(long)]
        preview: Option<PathBuf>,
    },
    /// Render a mesh with the reference z-buffer rasterizer.
    Rasterize {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        camera: PathBuf,
        /// Output image (.png or .imgf).
        #[arg(long)]
        out: PathBuf,
        /// Background color R,G,B in [0,1].
        #[arg(long, value_delimiter = ',', num_args = 1..=3, default_values_t = [1.0, 1.0, 1.0])]
        background: Vec<f64>,
    },
    /// Pose the body model and write the mesh.
    Pose {
        #[command(flatten)]
        model: ModelPose,
        /// Output mesh (.obj / .ply).
        #[arg(long)]
        out: PathBuf,
    },
    /// Invert skinning on a registration to get a subject-specific template.
    Unpose {
        #[command(flatten)]
        model: ModelPose,
        /// Posed registration with the model's vertex count (.obj / .ply).
        #[arg(long)]
        registration: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pose a subject-specific template.
    Repose {
        #[command(flatten)]
        model: ModelPose,
        /// Subject-specific rest template (.obj / .ply).
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Move along shape directions: base beta plus per-coefficient deltas.
    Reshape {
        #[command(flatten)]
        model: ModelPose,
        /// Coefficient change INDEX=VALUE; repeatable.
        #[arg(long = "beta-delta", value_parser = commands::parse_beta_delta, allow_hyphen_values = true)]
        beta_delta: Vec<(usize, f64)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a pose sequence from a ring of cameras (frames × cameras images).
    Animate {
        #[arg(long)]
        model: PathBuf,
        /// Pose sequence JSON.
        #[arg(long)]
        poses: PathBuf,
        /// Number of rig cameras.
        #[arg(long, default_value_t = 8)]
        rig: usize,
        /// Subject-specific template to repose instead of the model template.
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        beta: Vec<f64>,
        /// Camera distance from the subject center; fitted when absent.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 308)]
        width: u32,
        #[arg(long, default_value_t = 410)]
        height: u32,
        /// Output kind: splat (.rgbd) or raster (.png).
        #[arg(long, value_enum, default_value_t = commands::AnimateMode::Splat)]
        mode: commands::AnimateMode,
        /// Replace a non-empty output directory.
        #[arg(long)]
        overwrite: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a paired projection / ground-truth dataset.
    DatasetGen {
        /// Dataset config JSON; defaults are used when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        subjects: Option<usize>,
        #[arg(long)]
        cameras_per_subject: Option<usize>,
        #[arg(long)]
        poses_per_subject: Option<usize>,
        /// Image size WIDTH,HEIGHT.
        #[arg(long, value_delimiter = ',', num_args = 1..=2)]
        image_size: Option<Vec<u32>>,
        #[arg(long)]
        clutter: bool,
        #[arg(long)]
        png: bool,
        /// Replace a non-empty output directory.
        #[arg(long)]
        overwrite: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a procedural synthetic body model.
    SynthModel {
        /// Output model (.bsm1).
        #[arg(long)]
        out: PathBuf,
        /// Uniform scale applied to the human-sized subject.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Also write the colored rest mesh (.obj / .ply).
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// PSNR between image pairs, one JSON line per pair.
    Metrics {
        /// Images as A B [A B ...] (.png / .imgf).
        #[arg(required = true, num_args = 2..)]
        images: Vec<PathBuf>,
        /// Write the JSON lines here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(1);
    }
    match commands::run(cli.command, cli.seed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", error_chain(&e));
            if e.downcast_ref::<commands::UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

/// Joins the error chain, skipping causes whose text the outer message
/// already includes.
fn error_chain(e: &anyhow::Error) -> String {
    let mut out = e.to_string();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !out.contains(&text) {
            out.push_str(": ");
            out.push_str(&text);
        }
    }
    out
}
