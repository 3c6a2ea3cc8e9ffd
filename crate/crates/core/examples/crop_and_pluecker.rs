//! Cuts the default 12-view crop layout from a synthetic panorama and reports
//! how many views see each panorama pixel, then builds a Plücker map.
//!
//! cargo run --example crop_and_pluecker

use panoworld::pano::{coverage_map, default_crop_layout, pano_to_perspective, pluecker_embedding};
use panoworld::synthetic::{Panel, SyntheticScene};
use panoworld::{CameraPose, Vec3};

fn main() -> panoworld::Result<()> {
    let scene = SyntheticScene::box_room(4.0).with_panel(Panel { z: 2.0, x: (-0.5, 0.5), y: (-0.5, 0.5) });
    let (pano, _) = scene.render_pano(&CameraPose::identity(), 512, 256)?;

    let layout = default_crop_layout().with_size(128);
    for (i, spec) in layout.views().iter().enumerate() {
        let crop = pano_to_perspective(&pano, spec);
        let mean: f64 = crop.as_slice().iter().map(|p| p.sum() / 3.0).sum::<f64>() / crop.as_slice().len() as f64;
        println!(
            "view {i:2}: yaw {:7.1} pitch {:6.1} fov {:5.1}  mean intensity {mean:.3}",
            spec.yaw.to_degrees(),
            spec.pitch.to_degrees(),
            spec.fov.to_degrees()
        );
    }

    let cover = coverage_map(layout.views(), 128, 256);
    let min = cover.as_slice().iter().min().unwrap();
    let max = cover.as_slice().iter().max().unwrap();
    println!("coverage: every pixel seen by {min}..={max} views");

    let pose = CameraPose::at(Vec3::new(0.5, 0.0, -1.0));
    let map = pluecker_embedding(&pose, 64, 32);
    let [dx, dy, dz, mx, my, mz] = map.get(32, 16);
    println!("plücker at image center: d = ({dx:.3}, {dy:.3}, {dz:.3}), m = ({mx:.3}, {my:.3}, {mz:.3})");
    Ok(())
}
