//! Recovers per-keyframe depth scales: each keyframe's depth is wrong by an
//! unknown factor, and alignment against earlier keyframes undoes it.
//!
//! cargo run --example depth_alignment

use panoworld::splat::{align_depth_scales_with, AlignOptions};
use panoworld::synthetic::{Panel, SyntheticScene};
use panoworld::{CameraPose, Vec3};

fn main() -> panoworld::Result<()> {
    let scene = SyntheticScene::box_room(5.0).with_panel(Panel { z: 2.0, x: (-0.5, 0.5), y: (-0.5, 0.5) });
    let factors = [1.0, 1.3, 0.7, 1.1];
    let mut poses = Vec::new();
    let mut depths = Vec::new();
    for (i, k) in factors.iter().enumerate() {
        let pose = CameraPose::at(Vec3::new(0.3 * i as f64, 0.0, -0.2 * i as f64));
        let (_, depth) = scene.render_pano(&pose, 128, 64)?;
        depths.push(depth.scaled(*k)?);
        poses.push(pose);
    }
    let scales = align_depth_scales_with(&depths, &poses, &AlignOptions { pixel_stride: 2, ..Default::default() })?;
    for (i, (s, k)) in scales.iter().zip(factors).enumerate() {
        println!("keyframe {i}: scale {s:.5}, scale * distortion {:.5}", s * k);
    }
    Ok(())
}
