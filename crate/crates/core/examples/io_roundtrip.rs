//! Writes and reads back every interchange format in a temporary directory.
//!
//! cargo run --example io_roundtrip

use panoworld::io::*;
use panoworld::mesh::DEFAULT_TAU;
use panoworld::splat::fuse_point_cloud;
use panoworld::splat::init_gaussians;
use panoworld::synthetic::SyntheticScene;
use panoworld::{CameraPose, Trajectory, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("panoworld-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let scene = SyntheticScene::box_room(3.0);
    let pose = CameraPose::identity();
    let (pano, depth) = scene.render_pano(&pose, 64, 32)?;

    write_depth_pfm(&depth, &dir.join("depth.pfm"))?;
    let back = read_depth_pfm(&dir.join("depth.pfm"))?;
    let err = depth.grid().as_slice().iter().zip(back.grid().as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("pfm: max error {err:.2e} (f32 storage)");

    write_rgb_png(pano.image(), &dir.join("pano.png"))?;
    let png = read_pano_png(&dir.join("pano.png"))?;
    println!("png: {}x{}", png.width(), png.height());

    let traj = Trajectory::new((0..3).map(|i| CameraPose::at(Vec3::new(i as f64, 0.0, 0.0))).collect())?;
    write_trajectory_json(&traj, &dir.join("traj.json"))?;
    println!("trajectory: {} poses", read_trajectory_json(&dir.join("traj.json"))?.len());

    let points = fuse_point_cloud(&[pano], &[depth], &[1.0], &[pose], 4, DEFAULT_TAU)?;
    let cloud = init_gaussians(&points, 64)?;
    write_gaussians_ply(&cloud, &dir.join("cloud.ply"))?;
    println!("gaussian ply: {} splats", read_gaussians_ply(&dir.join("cloud.ply"))?.len());

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
