//! Analytic synthetic scenes used by tests, examples and the CLI demo inputs.
//!
//! A scene is an axis-aligned room seen from the inside plus optional flat
//! rectangular panels facing the z axis. Ray distances are exact, so panoramas
//! and depth maps generated here are ground truth for every downstream stage.

use nalgebra::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Rgb, RgbImage};
use crate::mesh::Aabb;
use crate::pano::{pixel_center_direction, CameraPose, PanoFrame, PerspectiveViewSpec, RayDepthMap, Vec3};
use crate::route::WalkablePointSet;

/// Zero-thickness rectangle in the plane `z = const`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub z: f64,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Panel {
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        if dir.z.abs() < 1e-15 {
            return None;
        }
        let t = (self.z - origin.z) / dir.z;
        if t <= 0.0 {
            return None;
        }
        let p = origin + dir * t;
        (p.x >= self.x.0 && p.x <= self.x.1 && p.y >= self.y.0 && p.y <= self.y.1).then_some(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub room: Aabb,
    pub panels: Vec<Panel>,
}

impl SyntheticScene {
    /// Cube room of half-size `half` centered on the origin.
    pub fn box_room(half: f64) -> Self {
        Self {
            room: Aabb {
                min: Vec3::repeat(-half),
                max: Vec3::repeat(half),
            },
            panels: Vec::new(),
        }
    }

    pub fn with_panel(mut self, panel: Panel) -> Self {
        self.panels.push(panel);
        self
    }

    /// Distance from `origin` (inside the room) to the wall along unit `dir`.
    pub fn wall_distance(&self, origin: &Vec3, dir: &Vec3) -> f64 {
        let mut t = f64::INFINITY;
        for k in 0..3 {
            if dir[k] > 0.0 {
                t = t.min((self.room.max[k] - origin[k]) / dir[k]);
            } else if dir[k] < 0.0 {
                t = t.min((self.room.min[k] - origin[k]) / dir[k]);
            }
        }
        t
    }

    /// Nearest surface distance along the ray and whether it is a panel.
    pub fn trace(&self, origin: &Vec3, dir: &Vec3) -> (f64, bool) {
        let wall = self.wall_distance(origin, dir);
        self.panels
            .iter()
            .filter_map(|p| p.intersect(origin, dir))
            .filter(|&t| t < wall)
            .fold((wall, false), |best, t| if t < best.0 { (t, true) } else { best })
    }

    pub fn ray_distance(&self, origin: &Vec3, dir: &Vec3) -> f64 {
        self.trace(origin, dir).0
    }

    /// Smooth procedural albedo; panels use a phase-shifted palette so
    /// occlusion boundaries stay visible.
    pub fn color_at(&self, p: &Vec3, on_panel: bool) -> Rgb {
        let shift = if on_panel { 1.7 } else { 0.0 };
        Rgb::new(
            0.5 + 0.3 * (0.7 * p.x + 0.4 * p.y + shift).sin(),
            0.5 + 0.3 * (0.5 * p.z - 0.6 * p.y + 0.8 + shift).sin(),
            0.5 + 0.3 * (0.45 * (p.x + p.z) + 2.1 - shift).cos(),
        )
    }

    fn shade(&self, origin: &Vec3, dir: &Vec3) -> (Rgb, f64) {
        let (t, panel) = self.trace(origin, dir);
        (self.color_at(&(origin + dir * t), panel), t)
    }

    /// Equirectangular color and ray distance seen from `pose`.
    pub fn render_pano(&self, pose: &CameraPose, width: usize, height: usize) -> Result<(PanoFrame, RayDepthMap)> {
        if width != 2 * height || height < 2 {
            return Err(Error::domain(format!("panorama must be 2H x H with H >= 2, got {width}x{height}")));
        }
        let mut colors = Vec::with_capacity(width * height);
        let mut depths = Vec::with_capacity(width * height);
        let origin = pose.position();
        for row in 0..height {
            for col in 0..width {
                let d = pose.to_world(pixel_center_direction(col, row, width, height).as_vec());
                let (c, t) = self.shade(&origin, &d);
                colors.push(c);
                depths.push(t);
            }
        }
        let pano = PanoFrame::new(RgbImage::from_vec(width, height, colors)?)?;
        let depth = RayDepthMap::new(crate::grid::Grid::from_vec(width, height, depths)?)?;
        Ok((pano, depth))
    }

    /// Ground-truth perspective view through pixel centers.
    pub fn render_perspective(&self, pose: &CameraPose, spec: &PerspectiveViewSpec) -> RgbImage {
        let view = pose.compose_view(spec);
        let origin = view.position();
        RgbImage::from_fn(spec.size, spec.size, |col, row| {
            let ray = spec.pixel_ray(col as f64 + 0.5, row as f64 + 0.5);
            self.shade(&origin, &view.rotation().transform_vector(&ray)).0
        })
    }
}

/// Walkable points and obstacle boxes for route sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Floorplan {
    pub points: WalkablePointSet,
    pub boxes: Vec<Aabb>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorplanParams {
    /// Side length of the square floor, meters.
    pub extent: f64,
    pub obstacles: usize,
    /// Jittered grid spacing of walkable samples, meters.
    pub spacing: f64,
    /// Samples closer than this to an obstacle footprint are dropped.
    pub clearance: f64,
    pub plane_height: f64,
    pub seed: u64,
}

impl Default for FloorplanParams {
    fn default() -> Self {
        Self {
            extent: 30.0,
            obstacles: 12,
            spacing: 1.0,
            clearance: 0.9,
            plane_height: 0.0,
            seed: 0,
        }
    }
}

/// Square floor with random box obstacles standing on it. Obstacles reach
/// 2.5 m above the floor (toward −y), covering the camera height.
pub fn synthetic_floorplan(params: &FloorplanParams) -> Result<Floorplan> {
    if !(params.extent > 0.0 && params.spacing > 0.0 && params.clearance >= 0.0) {
        return Err(Error::domain("floorplan extent, spacing and clearance must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let e = params.extent;
    let h = params.plane_height;
    let boxes: Vec<Aabb> = (0..params.obstacles)
        .map(|_| {
            let (sx, sz) = (rng.random_range(1.0..3.0), rng.random_range(1.0..3.0));
            let (x, z) = (rng.random_range(0.0..e - sx), rng.random_range(0.0..e - sz));
            Aabb {
                min: Vec3::new(x, h - 2.5, z),
                max: Vec3::new(x + sx, h, z + sz),
            }
        })
        .collect();
    let n = (e / params.spacing).floor() as usize;
    let mut points = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let jitter = 0.25 * params.spacing;
            let u = (i as f64 * params.spacing + rng.random_range(-jitter..jitter)).clamp(0.0, e);
            let v = (j as f64 * params.spacing + rng.random_range(-jitter..jitter)).clamp(0.0, e);
            let blocked = boxes.iter().any(|b| {
                let dx = (b.min.x - u).max(u - b.max.x).max(0.0);
                let dz = (b.min.z - v).max(v - b.max.z).max(0.0);
                dx.hypot(dz) < params.clearance
            });
            if !blocked {
                points.push(Point2::new(u, v));
            }
        }
    }
    Ok(Floorplan {
        points: WalkablePointSet::new(points, h),
        boxes,
    })
}
