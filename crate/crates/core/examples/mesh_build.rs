//! Lifts a panorama with ray depth into a scene mesh and counts the faces
//! that straddle depth discontinuities.
//!
//! cargo run --example mesh_build [out.ply]

use panoworld::io::write_mesh_ply;
use panoworld::mesh::{build_scene_mesh, detect_discontinuities, mesh_bounds, DEFAULT_TAU};
use panoworld::synthetic::{Panel, SyntheticScene};
use panoworld::CameraPose;
use std::path::PathBuf;

fn main() -> panoworld::Result<()> {
    let scene = SyntheticScene::box_room(5.0).with_panel(Panel { z: 2.0, x: (-0.5, 0.5), y: (-0.5, 0.5) });
    let (pano, depth) = scene.render_pano(&CameraPose::identity(), 256, 128)?;

    let flags = detect_discontinuities(&depth, DEFAULT_TAU)?;
    let flagged = flags.as_slice().iter().filter(|f| **f).count();
    let mesh = build_scene_mesh(&pano, &depth, &CameraPose::identity(), DEFAULT_TAU)?;
    let hidden = (0..mesh.faces.len()).filter(|&f| !mesh.face_visible(f)).count();
    let bounds = mesh_bounds(&mesh)?;

    println!("{} vertices, {} faces", mesh.vertices.len(), mesh.faces.len());
    println!("{flagged} discontinuity vertices, {hidden} invisible faces");
    println!("bounds {:?} .. {:?}", bounds.min.as_slice(), bounds.max.as_slice());

    if let Some(out) = std::env::args().nth(1).map(PathBuf::from) {
        write_mesh_ply(&mesh, &out)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}
