//! Geometry pipeline for panoramic 3D world generation.
//!
//! * [`pano`]: equirectangular math, perspective crops, Plücker embeddings.
//! * [`mesh`]: occlusion-aware scene mesh from a panorama and ray depth.
//! * [`render`]: software rasterizer producing masked guidance frames.
//! * [`route`]: walkable-surface route sampling (Delaunay, Dijkstra, smoothing, collisions).
//! * [`splat`]: Gaussian reconstruction: keyframes, depth registration, splat rendering and optimization.
//! * [`io`] and [`cli`]: file formats and the command-line pipeline.

pub mod bvh;
pub mod cli;
pub mod error;
pub mod grid;
pub mod io;
pub mod mesh;
pub mod pano;
pub mod render;
pub mod route;
pub mod splat;
pub mod synthetic;

pub use error::{Error, Result};
pub use grid::{Grid, Mask, Rgb, RgbImage};
pub use mesh::{build_scene_mesh, detect_discontinuities, Aabb, SceneMesh, Vertex};
pub use pano::{
    CameraPose, CropLayout, Direction, PanoFrame, PerspectiveViewSpec, PlueckerMap, RayDepthMap,
    SphericalCoord, Trajectory, Vec3,
};
pub use render::{MaskedFrame, RasterOutput, StitchedFrame};
