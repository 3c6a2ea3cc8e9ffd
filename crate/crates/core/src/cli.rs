//! Command-line pipeline. Each subcommand runs exactly one stage.
//!
//! Exit status is 0 on success, 1 on domain or format errors and 2 on usage
//! errors. Failures are reported on stderr as one JSON object per line;
//! successes print a one-line JSON summary on stdout.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::RgbImage;
use crate::io;
use crate::mesh::build_scene_mesh;
use crate::pano::{
    coverage_map, default_crop_layout, pano_to_perspective, pluecker_embedding, CameraPose, PanoFrame,
    PerspectiveViewSpec, RayDepthMap, Trajectory,
};
use crate::render::render_guidance_video;
use crate::route::sample_route;
use crate::splat::{
    align_depth_scales_with, fuse_point_cloud, init_gaussians, optimize_gaussians, render_gaussians,
    sample_reference_views, select_keyframes, AlignOptions, OptimConfig, TrainingView,
};

#[derive(Debug, Parser)]
#[command(name = "panoworld", version, about = "Panoramic scene geometry pipeline")]
struct Cli {
    /// JSON file with pipeline settings; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every stochastic stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Resolution {
    /// Output panorama width (must equal 2 x height).
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the occlusion-aware scene mesh from a panorama and its ray depth.
    MeshBuild {
        #[arg(long)]
        pano: PathBuf,
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        /// Source pose trajectory; frame `--frame` is used (identity if omitted).
        #[arg(long)]
        traj: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        frame: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render masked guidance frames along a trajectory (panorama at the origin).
    RenderTraj {
        #[arg(long)]
        pano: PathBuf,
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[command(flatten)]
        resolution: Resolution,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Sample an exploration route over a walkable floor.
    SampleRoute {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        min_len: Option<f64>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cut perspective crops out of a panorama (default 12-view layout).
    Crop {
        #[arg(long)]
        pano: PathBuf,
        /// Single view yaw in degrees; omit for the default layout.
        #[arg(long, requires = "fov")]
        yaw: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        pitch: f64,
        #[arg(long)]
        fov: Option<f64>,
        #[arg(long, default_value_t = 512)]
        size: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write per-frame Plücker ray maps as `.npy` arrays of shape (H, W, 6).
    Pluecker {
        #[arg(long)]
        traj: PathBuf,
        #[command(flatten)]
        resolution: Resolution,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Register keyframe depth scales against each other.
    AlignDepth {
        #[arg(long, num_args = 1.., required = true)]
        depth: Vec<PathBuf>,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        /// Cast rays from every n-th row and column only.
        #[arg(long, default_value_t = 1)]
        pixel_stride: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Align keyframes, fuse their points and initialize Gaussians.
    ReconInit {
        #[arg(long, num_args = 1.., required = true)]
        pano: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        depth: Vec<PathBuf>,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        /// Keep every n-th pixel (both axes) when fusing and aligning.
        #[arg(long, default_value_t = 1)]
        subsample: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize Gaussian colors and opacities against keyframe crops.
    ReconOpt {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        pano: Vec<PathBuf>,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long, default_value_t = 512)]
        crop_size: usize,
        /// Optional JSON file receiving the per-step loss history.
        #[arg(long)]
        loss_out: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render Gaussians from one trajectory frame or from sampled reference views.
    RenderGs {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, default_value_t = 0)]
        frame: usize,
        #[arg(long, default_value_t = 0.0)]
        yaw: f64,
        #[arg(long, default_value_t = 0.0)]
        pitch: f64,
        #[arg(long, default_value_t = 90.0)]
        fov: f64,
        #[arg(long, default_value_t = 512)]
        size: usize,
        /// Sample this many reference views instead of a single view.
        #[arg(long, requires = "out_dir", conflicts_with = "out")]
        reference_views: Option<usize>,
        #[arg(long, required_unless_present = "reference_views")]
        out: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Report how many default-layout crops see each panorama pixel.
    CoverageCheck {
        #[command(flatten)]
        resolution: Resolution,
    },
}

/// Runs the pipeline CLI on `args` (including the program name).
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(args, &mut std::io::stdout(), &mut std::io::stderr())
}

/// [`cli_main`] with explicit output streams.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let message = e.kind().as_str().map(str::to_string).unwrap_or_else(|| first_line(&e.to_string()));
            let _ = writeln!(err, "{}", json!({"status": "error", "kind": "usage", "message": message}));
            return 2;
        }
    };
    match execute(cli) {
        Ok(summary) => {
            let _ = writeln!(out, "{summary}");
            0
        }
        Err(e) => {
            let _ = writeln!(err, "{}", error_record(&e));
            1
        }
    }
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or_default().trim_start_matches("error: ").to_string()
}

/// Single-line JSON record describing `e`.
pub fn error_record(e: &Error) -> Value {
    let mut record = json!({"status": "error", "kind": e.kind(), "message": e.to_string()});
    match e {
        Error::DimensionMismatch {
            expected_width,
            expected_height,
            width,
            height,
        } => {
            record["expected"] = json!([expected_width, expected_height]);
            record["found"] = json!([width, height]);
        }
        Error::Format { path, offset, .. } => {
            record["path"] = json!(path);
            record["offset"] = json!(offset);
        }
        Error::Io { path, .. } => record["path"] = json!(path.display().to_string()),
        Error::AlignmentFailure { frame } => record["frame"] = json!(frame),
        _ => {}
    }
    record
}

fn ok(command: &str, extra: Value) -> Value {
    let mut v = json!({"status": "ok", "command": command});
    if let (Some(obj), Value::Object(more)) = (v.as_object_mut(), extra) {
        obj.extend(more);
    }
    v
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn load_config(cli: &Cli) -> Result<io::PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => io::read_config_json(p)?,
        None => io::PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn apply_resolution(cfg: &mut io::PipelineConfig, r: &Resolution) {
    if let Some(w) = r.width {
        cfg.width = w;
    }
    if let Some(h) = r.height {
        cfg.height = h;
    }
}

fn read_panos(paths: &[PathBuf]) -> Result<Vec<PanoFrame>> {
    paths.iter().map(|p| io::read_pano_png(p)).collect()
}

fn read_depths(paths: &[PathBuf]) -> Result<Vec<RayDepthMap>> {
    paths.iter().map(|p| io::read_depth_pfm(p)).collect()
}

/// Poses for `n` keyframes: the trajectory itself when it has `n` frames,
/// otherwise its stride-selected keyframes.
fn keyframe_poses(traj: &Trajectory, n: usize, stride: usize) -> Result<Vec<CameraPose>> {
    if traj.len() == n {
        return Ok(traj.poses().to_vec());
    }
    let keys = select_keyframes(traj.len(), stride)?;
    if keys.len() != n {
        return Err(Error::domain(format!(
            "{n} keyframe inputs match neither the {} trajectory frames nor its {} stride-{stride} keyframes",
            traj.len(),
            keys.len()
        )));
    }
    Ok(keys.iter().map(|&k| traj.poses()[k]).collect())
}

fn frame_pose(traj: &Trajectory, frame: usize) -> Result<CameraPose> {
    traj.poses()
        .get(frame)
        .copied()
        .ok_or_else(|| Error::domain(format!("frame {frame} out of range for {}-frame trajectory", traj.len())))
}

fn execute(cli: Cli) -> Result<Value> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::MeshBuild {
            pano,
            depth,
            tau,
            traj,
            frame,
            out,
        } => {
            cfg.tau = tau.unwrap_or(cfg.tau);
            cfg.validate()?;
            let pose = match traj {
                Some(t) => frame_pose(&io::read_trajectory_json(&t)?, frame)?,
                None => CameraPose::identity(),
            };
            let mesh = build_scene_mesh(&io::read_pano_png(&pano)?, &io::read_depth_pfm(&depth)?, &pose, cfg.tau)?;
            io::write_mesh_ply(&mesh, &out)?;
            let hidden = mesh.vertices.iter().filter(|v| !v.visible).count();
            Ok(ok(
                "mesh-build",
                json!({"vertices": mesh.vertices.len(), "faces": mesh.faces.len(), "flagged": hidden}),
            ))
        }
        Command::RenderTraj {
            pano,
            depth,
            traj,
            tau,
            resolution,
            out_dir,
        } => {
            cfg.tau = tau.unwrap_or(cfg.tau);
            apply_resolution(&mut cfg, &resolution);
            cfg.validate()?;
            let mesh = build_scene_mesh(
                &io::read_pano_png(&pano)?,
                &io::read_depth_pfm(&depth)?,
                &CameraPose::identity(),
                cfg.tau,
            )?;
            let traj = io::read_trajectory_json(&traj)?;
            let frames = render_guidance_video(&mesh, &traj, cfg.width, cfg.height)?;
            ensure_dir(&out_dir)?;
            for (i, f) in frames.iter().enumerate() {
                io::write_rgb_png(f.rgb.image(), &io::numbered_path(&out_dir, "frame", i, "png"))?;
                io::write_mask_png(&f.mask, &io::numbered_path(&out_dir, "mask", i, "png"))?;
            }
            Ok(ok("render-traj", json!({"frames": frames.len(), "width": cfg.width, "height": cfg.height})))
        }
        Command::SampleRoute {
            scene,
            min_len,
            frames,
            out,
        } => {
            cfg.sampler.min_len = min_len.unwrap_or(cfg.sampler.min_len);
            cfg.sampler.frames = frames.unwrap_or(cfg.sampler.frames);
            cfg.validate()?;
            let scene = io::read_scene_json(&scene)?;
            let route = sample_route(&scene.walkable(), &scene.boxes()?, &cfg.route_params())?
                .map_err(|r| Error::DegenerateInput(r.to_string()))?;
            io::write_trajectory_json(&route.trajectory, &out)?;
            Ok(ok(
                "sample-route",
                json!({"length": route.length, "frames": route.trajectory.len(), "attempts": route.attempts, "seed": cfg.seed}),
            ))
        }
        Command::Crop {
            pano,
            yaw,
            pitch,
            fov,
            size,
            out_dir,
        } => {
            let pano = io::read_pano_png(&pano)?;
            let views = match (yaw, fov) {
                (Some(yaw), Some(fov)) => {
                    vec![PerspectiveViewSpec::new(yaw.to_radians(), pitch.to_radians(), fov.to_radians(), size)?]
                }
                _ => default_crop_layout().with_size(size).views().to_vec(),
            };
            ensure_dir(&out_dir)?;
            for (i, v) in views.iter().enumerate() {
                io::write_rgb_png(&pano_to_perspective(&pano, v), &io::numbered_path(&out_dir, "crop", i, "png"))?;
            }
            Ok(ok("crop", json!({"views": views.len(), "size": size})))
        }
        Command::Pluecker {
            traj,
            resolution,
            out_dir,
        } => {
            apply_resolution(&mut cfg, &resolution);
            cfg.validate()?;
            let traj = io::read_trajectory_json(&traj)?;
            ensure_dir(&out_dir)?;
            for (i, pose) in traj.poses().iter().enumerate() {
                let map = pluecker_embedding(pose, cfg.width, cfg.height);
                io::write_pluecker_npy(&map, &io::numbered_path(&out_dir, "pluecker", i, "npy"))?;
            }
            Ok(ok("pluecker", json!({"frames": traj.len(), "width": cfg.width, "height": cfg.height})))
        }
        Command::AlignDepth {
            depth,
            traj,
            stride,
            tau,
            pixel_stride,
            out,
        } => {
            cfg.keyframe_stride = stride.unwrap_or(cfg.keyframe_stride);
            cfg.tau = tau.unwrap_or(cfg.tau);
            cfg.validate()?;
            let depths = read_depths(&depth)?;
            let poses = keyframe_poses(&io::read_trajectory_json(&traj)?, depths.len(), cfg.keyframe_stride)?;
            let opts = AlignOptions { tau: cfg.tau, pixel_stride };
            let scales = align_depth_scales_with(&depths, &poses, &opts)?;
            io::write_json(&json!({ "scales": scales }), &out)?;
            Ok(ok("align-depth", json!({ "scales": scales })))
        }
        Command::ReconInit {
            pano,
            depth,
            traj,
            stride,
            tau,
            subsample,
            out,
        } => {
            cfg.keyframe_stride = stride.unwrap_or(cfg.keyframe_stride);
            cfg.tau = tau.unwrap_or(cfg.tau);
            cfg.validate()?;
            if pano.len() != depth.len() {
                return Err(Error::domain(format!("{} panoramas but {} depth maps", pano.len(), depth.len())));
            }
            let panos = read_panos(&pano)?;
            let depths = read_depths(&depth)?;
            let poses = keyframe_poses(&io::read_trajectory_json(&traj)?, depths.len(), cfg.keyframe_stride)?;
            let opts = AlignOptions {
                tau: cfg.tau,
                pixel_stride: subsample,
            };
            let scales = align_depth_scales_with(&depths, &poses, &opts)?;
            let points = fuse_point_cloud(&panos, &depths, &scales, &poses, subsample, cfg.tau)?;
            let cloud = init_gaussians(&points, panos[0].width())?;
            io::write_gaussians_ply(&cloud, &out)?;
            Ok(ok("recon-init", json!({"gaussians": cloud.len(), "scales": scales})))
        }
        Command::ReconOpt {
            cloud,
            pano,
            traj,
            stride,
            iters,
            lr,
            crop_size,
            loss_out,
            out,
        } => {
            cfg.keyframe_stride = stride.unwrap_or(cfg.keyframe_stride);
            cfg.optimizer.iters = iters.unwrap_or(cfg.optimizer.iters);
            cfg.optimizer.lr = lr.unwrap_or(cfg.optimizer.lr);
            cfg.validate()?;
            let cloud = io::read_gaussians_ply(&cloud)?;
            let panos = read_panos(&pano)?;
            let poses = keyframe_poses(&io::read_trajectory_json(&traj)?, panos.len(), cfg.keyframe_stride)?;
            let layout = default_crop_layout().with_size(crop_size);
            let views: Vec<TrainingView> = panos
                .iter()
                .zip(&poses)
                .flat_map(|(p, pose)| {
                    layout.views().iter().map(move |spec| TrainingView {
                        pose: *pose,
                        spec: *spec,
                        target: pano_to_perspective(p, spec),
                    })
                })
                .collect();
            let config = OptimConfig {
                iters: cfg.optimizer.iters,
                lr: cfg.optimizer.lr,
                seed: cfg.seed,
            };
            let state = optimize_gaussians(&cloud, &views, &config)?;
            io::write_gaussians_ply(&state.cloud, &out)?;
            if let Some(p) = loss_out {
                io::write_json(&json!({ "loss": state.loss_history }), &p)?;
            }
            let tail = |s: &[f64]| s.iter().sum::<f64>() / s.len().max(1) as f64;
            let h = &state.loss_history;
            let k = h.len().min(10);
            Ok(ok(
                "recon-opt",
                json!({"iterations": state.iteration, "first_loss": tail(&h[..k]), "last_loss": tail(&h[h.len() - k..])}),
            ))
        }
        Command::RenderGs {
            cloud,
            traj,
            frame,
            yaw,
            pitch,
            fov,
            size,
            reference_views,
            out,
            out_dir,
        } => {
            let cloud = io::read_gaussians_ply(&cloud)?;
            let traj = io::read_trajectory_json(&traj)?;
            match (reference_views, out, out_dir) {
                (Some(count), _, Some(dir)) => {
                    let set = sample_reference_views(&traj, count, cfg.seed)?;
                    ensure_dir(&dir)?;
                    let mut records = Vec::new();
                    for (i, v) in set.views.iter().enumerate() {
                        let img = render_gaussians(&cloud, &v.pose, &v.spec).rgb;
                        io::write_rgb_png(&img, &io::numbered_path(&dir, "view", i, "png"))?;
                        let r = v.pose.rotation().matrix();
                        records.push(json!({
                            "category": v.category,
                            "rotation": (0..9).map(|k| r[(k / 3, k % 3)]).collect::<Vec<_>>(),
                            "position": [v.pose.position().x, v.pose.position().y, v.pose.position().z],
                            "yaw": v.spec.yaw, "pitch": v.spec.pitch, "fov": v.spec.fov, "size": v.spec.size,
                        }));
                    }
                    io::write_json(&json!({ "views": records }), &dir.join("views.json"))?;
                    Ok(ok("render-gs", json!({ "views": set.views.len() })))
                }
                (None, Some(out), _) => {
                    let spec = PerspectiveViewSpec::new(yaw.to_radians(), pitch.to_radians(), fov.to_radians(), size)?;
                    let img: RgbImage = render_gaussians(&cloud, &frame_pose(&traj, frame)?, &spec).rgb;
                    io::write_rgb_png(&img, &out)?;
                    Ok(ok("render-gs", json!({ "views": 1 })))
                }
                _ => Err(Error::domain("render-gs needs --out, or --reference-views with --out-dir")),
            }
        }
        Command::CoverageCheck { resolution } => {
            apply_resolution(&mut cfg, &resolution);
            cfg.validate()?;
            let layout = default_crop_layout();
            let counts = coverage_map(layout.views(), cfg.height, cfg.width);
            let min = counts.as_slice().iter().copied().min().unwrap_or(0);
            let max = counts.as_slice().iter().copied().max().unwrap_or(0);
            let uncovered = counts.as_slice().iter().filter(|&&c| c == 0).count();
            let fovs_ok = layout
                .views()
                .iter()
                .all(|v| (60.0..=120.0).contains(&v.fov.to_degrees()));
            if uncovered > 0 || !fovs_ok {
                return Err(Error::domain(format!("{uncovered} pixels uncovered, fov range ok: {fovs_ok}")));
            }
            Ok(ok("coverage-check", json!({"views": layout.views().len(), "min": min, "max": max})))
        }
    }
}
