//! Builds Gaussians from a panorama's depth, fits them to perspective crops
//! and renders a novel view.
//!
//! cargo run --release --example splat_optimize

use panoworld::grid::psnr;
use panoworld::mesh::DEFAULT_TAU;
use panoworld::pano::{default_crop_layout, pano_to_perspective};
use panoworld::splat::fuse_point_cloud;
use panoworld::splat::init_gaussians;
use panoworld::splat::{optimize_gaussians, OptimConfig, TrainingView};
use panoworld::splat::render_gaussians;
use panoworld::synthetic::{Panel, SyntheticScene};
use panoworld::{CameraPose, PerspectiveViewSpec, Vec3};

fn main() -> panoworld::Result<()> {
    let scene = SyntheticScene::box_room(4.0).with_panel(Panel { z: 2.0, x: (-0.5, 0.5), y: (-0.5, 0.5) });
    let pose = CameraPose::identity();
    let (pano, depth) = scene.render_pano(&pose, 256, 128)?;

    let points = fuse_point_cloud(&[pano.clone()], &[depth], &[1.0], &[pose], 2, DEFAULT_TAU)?;
    let cloud = init_gaussians(&points, 256)?;
    println!("{} gaussians", cloud.len());

    let views: Vec<TrainingView> = default_crop_layout()
        .with_size(64)
        .views()
        .iter()
        .map(|spec| TrainingView { pose, spec: *spec, target: pano_to_perspective(&pano, spec) })
        .collect();
    let state = optimize_gaussians(&cloud, &views, &OptimConfig { iters: 200, ..Default::default() })?;
    let head: f64 = state.loss_history[..10].iter().sum::<f64>() / 10.0;
    let tail: f64 = state.loss_history[state.loss_history.len() - 10..].iter().sum::<f64>() / 10.0;
    println!("loss {head:.4} -> {tail:.4}");

    let novel = CameraPose::at(Vec3::new(0.2, 0.0, 0.1));
    let spec = PerspectiveViewSpec::new(0.3, 0.0, 80f64.to_radians(), 96)?;
    let render = render_gaussians(&state.cloud, &novel, &spec);
    println!("novel view PSNR {:.2} dB", psnr(&render.rgb, &scene.render_perspective(&novel, &spec)));
    Ok(())
}
