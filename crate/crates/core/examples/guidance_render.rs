//! Renders masked guidance frames along a short dolly move. Pixels that were
//! hidden from the source camera come out masked.
//!
//! cargo run --example guidance_render [out_dir]

use panoworld::io::{numbered_path, write_mask_png, write_rgb_png};
use panoworld::mesh::{build_scene_mesh, DEFAULT_TAU};
use panoworld::render::render_guidance_video;
use panoworld::synthetic::{Panel, SyntheticScene};
use panoworld::{CameraPose, Trajectory, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = SyntheticScene::box_room(5.0).with_panel(Panel { z: 2.0, x: (-0.5, 0.5), y: (-0.5, 0.5) });
    let (pano, depth) = scene.render_pano(&CameraPose::identity(), 512, 256)?;
    let mesh = build_scene_mesh(&pano, &depth, &CameraPose::identity(), DEFAULT_TAU)?;

    let poses = (0..5).map(|i| CameraPose::at(Vec3::new(0.2 * i as f64, 0.0, 0.0))).collect();
    let frames = render_guidance_video(&mesh, &Trajectory::new(poses)?, 256, 128)?;

    let out = std::env::args().nth(1).map(std::path::PathBuf::from);
    for (i, f) in frames.iter().enumerate() {
        let holes = f.mask.as_slice().iter().filter(|m| !**m).count();
        println!("frame {i}: {holes} masked pixels");
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir)?;
            write_rgb_png(f.rgb.image(), &numbered_path(dir, "frame", i, "png"))?;
            write_mask_png(&f.mask, &numbered_path(dir, "mask", i, "png"))?;
        }
    }
    Ok(())
}
