//! Occlusion-aware scene mesh built from a panorama and its ray-depth map.
//!
//! Every pixel becomes a vertex; grid quads (including the wrap quad between
//! the last and first column) become two triangles split along the
//! `(i, j)-(i+1, j+1)` diagonal. Pixels sitting on a depth discontinuity keep
//! their vertex but are marked invisible and painted black.

use crate::error::{Error, Result};
use crate::grid::{Grid, Rgb};
use crate::pano::{pixel_center_direction, CameraPose, PanoFrame, RayDepthMap, Vec3};

/// Default relative depth-variation threshold.
pub const DEFAULT_TAU: f64 = 0.2;

/// `true` marks a pixel whose vertex is invisible.
pub type DiscontinuityMask = Grid<bool>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub position: Vec3,
    pub color: Rgb,
    pub visible: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneMesh {
    pub vertices: Vec<Vertex>,
    pub faces: Vec<[u32; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        if min.iter().zip(max.iter()).any(|(a, b)| !(a <= b)) {
            return Err(Error::domain(format!(
                "box min {min:?} exceeds max {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) / 2.0
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    /// Euclidean distance from `p` to the box; zero inside.
    pub fn distance(&self, p: &Vec3) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        let dz = (self.min.z - p.z).max(0.0).max(p.z - self.max.z);
        Vec3::new(dx, dy, dz).norm()
    }
}

impl SceneMesh {
    pub fn new(vertices: Vec<Vertex>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(face) = faces.iter().find(|f| f.iter().any(|&i| i as usize >= n)) {
            return Err(Error::domain(format!(
                "face {face:?} references a vertex outside 0..{n}"
            )));
        }
        Ok(Self { vertices, faces })
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Whether all three vertices of face `f` are visible.
    #[inline]
    pub fn face_visible(&self, f: usize) -> bool {
        self.faces[f]
            .iter()
            .all(|&i| self.vertices[i as usize].visible)
    }

    pub fn face_positions(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize].position,
            self.vertices[b as usize].position,
            self.vertices[c as usize].position,
        ]
    }

    /// Applies a rigid transform `p -> rotation * p + translation` to all vertices.
    pub fn transformed(&self, rotation: &nalgebra::Rotation3<f64>, translation: &Vec3) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|v| Vertex {
                    position: rotation * v.position + translation,
                    ..*v
                })
                .collect(),
            faces: self.faces.clone(),
        }
    }
}

/// Flags pixels whose largest relative depth change to any 8-connected
/// neighbor (wrapping horizontally) exceeds `tau`.
pub fn detect_discontinuities(depth: &RayDepthMap, tau: f64) -> Result<DiscontinuityMask> {
    if !(tau > 0.0) {
        return Err(Error::domain(format!("tau must be positive, got {tau}")));
    }
    let (w, h) = (depth.width(), depth.height());
    Ok(Grid::from_fn(w, h, |col, row| {
        let d = depth.get(col, row);
        for dr in -1i64..=1 {
            let r = row as i64 + dr;
            if r < 0 || r >= h as i64 {
                continue;
            }
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let c = (col as i64 + dc).rem_euclid(w as i64) as usize;
                let n = depth.get(c, r as usize);
                if (n - d).abs() / n.min(d) > tau {
                    return true;
                }
            }
        }
        false
    }))
}

/// Triangles of a `width` x `height` vertex grid with horizontal wraparound.
pub fn grid_faces(width: usize, height: usize) -> Vec<[u32; 3]> {
    let mut faces = Vec::with_capacity(2 * width * height.saturating_sub(1));
    let idx = |c: usize, r: usize| (r * width + c) as u32;
    for r in 0..height.saturating_sub(1) {
        for c in 0..width {
            let c1 = (c + 1) % width;
            let (a, b, d, e) = (idx(c, r), idx(c1, r), idx(c, r + 1), idx(c1, r + 1));
            faces.push([a, b, e]);
            faces.push([a, e, d]);
        }
    }
    faces
}

/// World position of pixel `(col, row)` at ray distance `distance` from `pose`.
#[inline]
pub fn unproject_pixel(pose: &CameraPose, col: usize, row: usize, width: usize, height: usize, distance: f64) -> Vec3 {
    let d = pixel_center_direction(col, row, width, height);
    pose.position() + distance * pose.to_world(d.as_vec())
}

pub fn build_scene_mesh(
    pano: &PanoFrame,
    depth: &RayDepthMap,
    pose: &CameraPose,
    tau: f64,
) -> Result<SceneMesh> {
    pano.image().check_same_size(depth.grid())?;
    let flags = detect_discontinuities(depth, tau)?;
    let (w, h) = (pano.width(), pano.height());
    let mut vertices = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let visible = !*flags.get(col, row);
            vertices.push(Vertex {
                position: unproject_pixel(pose, col, row, w, h, depth.get(col, row)),
                color: if visible { pano.pixel(col, row) } else { Rgb::zeros() },
                visible,
            });
        }
    }
    Ok(SceneMesh {
        vertices,
        faces: grid_faces(w, h),
    })
}

pub fn mesh_bounds(mesh: &SceneMesh) -> Result<Aabb> {
    let first = mesh
        .vertices
        .first()
        .ok_or_else(|| Error::domain("cannot bound an empty mesh"))?
        .position;
    let (min, max) = mesh.vertices.iter().fold((first, first), |(lo, hi), v| {
        (lo.inf(&v.position), hi.sup(&v.position))
    });
    Ok(Aabb { min, max })
}
