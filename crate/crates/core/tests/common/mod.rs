//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{Matrix2, Matrix3, Rotation3, UnitQuaternion, Vector2, Vector3};
use panoworld::bvh::TriangleBvh;
use panoworld::grid::{Grid, Rgb, RgbImage};
use panoworld::mesh::{build_scene_mesh, DEFAULT_TAU};
use panoworld::pano::{CameraPose, PanoFrame, PerspectiveViewSpec, RayDepthMap, Vec3};
use panoworld::splat::{Gaussian, GaussianCloud};
use panoworld::synthetic::{Panel, SyntheticScene};
use rand::Rng;

// ------------------------------------------------------------ spherical lookup

/// Equirect direction for a pixel center, written out from the angle
/// definitions rather than through the library.
pub fn oracle_direction(col: f64, row: f64, w: usize, h: usize) -> Vec3 {
    let phi = 2.0 * std::f64::consts::PI * col / w as f64 - std::f64::consts::PI;
    let theta = std::f64::consts::FRAC_PI_2 - std::f64::consts::PI * row / h as f64;
    Vec3::new(theta.cos() * phi.sin(), -theta.sin(), theta.cos() * phi.cos())
}

// ------------------------------------------------------------ scenes

/// Room of half-size 5 m with a 1 m panel 2 m in front of the origin.
pub fn panel_scene() -> SyntheticScene {
    SyntheticScene::box_room(5.0).with_panel(Panel {
        z: 2.0,
        x: (-0.5, 0.5),
        y: (-0.5, 0.5),
    })
}

// ------------------------------------------------------------ disocclusion labels

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Panel,
    Wall,
    Disoccluded,
    PoleCap,
}

impl Label {
    pub fn expected_mask(self) -> bool {
        matches!(self, Label::Panel | Label::Wall)
    }
}

/// Analytic visibility labels for an equirect view from `novel` of a scene
/// meshed from a panorama at the origin with `source_height` rows.
pub fn disocclusion_labels(scene: &SyntheticScene, novel: &CameraPose, w: usize, h: usize, source_height: usize) -> Grid<Label> {
    let theta_max = std::f64::consts::FRAC_PI_2 - std::f64::consts::PI * 0.5 / source_height as f64;
    let origin = novel.position();
    Grid::from_fn(w, h, |col, row| {
        let d = novel.rotation() * oracle_direction(col as f64 + 0.5, row as f64 + 0.5, w, h);
        let (t, on_panel) = scene.trace(&origin, &d);
        if on_panel {
            return Label::Panel;
        }
        let p = origin + d * t;
        let len = p.norm();
        let back = p / len;
        if (-back.y).asin().abs() > theta_max {
            return Label::PoleCap;
        }
        let blocked = scene.panels.iter().any(|panel| panel.intersect(&Vec3::zeros(), &back).is_some_and(|s| s < len));
        if blocked {
            Label::Disoccluded
        } else {
            Label::Wall
        }
    })
}

/// Pixels with a differently labeled 8-neighbor (horizontal wrap).
pub fn label_boundary<T: PartialEq + Clone>(labels: &Grid<T>) -> Grid<bool> {
    let (w, h) = (labels.width(), labels.height());
    Grid::from_fn(w, h, |c, r| {
        let me = labels.get(c, r);
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                let rr = r as i64 + dr;
                if rr < 0 || rr >= h as i64 {
                    continue;
                }
                let cc = (c as i64 + dc).rem_euclid(w as i64) as usize;
                if labels.get(cc, rr as usize) != me {
                    return true;
                }
            }
        }
        false
    })
}

// ------------------------------------------------------------ dense splat oracle

struct DenseGaussian {
    depth: f64,
    index: usize,
    center: Vector2<f64>,
    inv_cov: Matrix2<f64>,
    opacity: f64,
    color: Rgb,
}

fn quaternion_matrix(q: &UnitQuaternion<f64>) -> Matrix3<f64> {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Evaluates every Gaussian at every pixel and composites front to back.
/// Per-pixel alpha is clamped at 0.999 and dropped below 1/255; Gaussians
/// within 0.01 of the camera plane or with centers beyond 1.3x the half-fov
/// tangent are skipped.
pub fn dense_splat(cloud: &GaussianCloud, pose: &CameraPose, spec: &PerspectiveViewSpec) -> (RgbImage, Grid<f64>) {
    let view_rot = pose.rotation().matrix()
        * Rotation3::from_axis_angle(&Vector3::y_axis(), spec.yaw).matrix()
        * Rotation3::from_axis_angle(&Vector3::x_axis(), spec.pitch).matrix();
    let w2c = view_rot.transpose();
    let n = spec.size;
    let f = n as f64 / (2.0 * (spec.fov / 2.0).tan());
    let c = n as f64 / 2.0;
    let mut gs: Vec<DenseGaussian> = Vec::new();
    for (index, g) in cloud.gaussians.iter().enumerate() {
        let t = w2c * (g.mean - pose.position());
        let guard = 1.3 * (spec.fov / 2.0).tan();
        if t.z <= 0.01 || (t.x / t.z).abs() > guard || (t.y / t.z).abs() > guard {
            continue;
        }
        let r = quaternion_matrix(&g.rotation);
        let s = Matrix3::from_diagonal(&g.scale.component_mul(&g.scale));
        let sigma = w2c * (r * s * r.transpose()) * w2c.transpose();
        let j = nalgebra::Matrix2x3::new(f / t.z, 0.0, -f * t.x / (t.z * t.z), 0.0, f / t.z, -f * t.y / (t.z * t.z));
        let mut cov = j * sigma * j.transpose();
        let det = cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(1, 0)];
        if det < 1e-12 {
            cov[(0, 0)] += 1e-6;
            cov[(1, 1)] += 1e-6;
        }
        let det = cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(1, 0)];
        let inv_cov = Matrix2::new(cov[(1, 1)], -cov[(0, 1)], -cov[(1, 0)], cov[(0, 0)]) / det;
        gs.push(DenseGaussian {
            depth: t.z,
            index,
            center: Vector2::new(f * t.x / t.z + c, f * t.y / t.z + c),
            inv_cov,
            opacity: g.opacity,
            color: g.color,
        });
    }
    gs.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.index.cmp(&b.index)));
    let mut rgb = Grid::filled(n, n, Rgb::zeros());
    let mut alpha = Grid::filled(n, n, 0.0);
    for v in 0..n {
        for u in 0..n {
            let px = Vector2::new(u as f64 + 0.5, v as f64 + 0.5);
            let (mut color, mut trans) = (Rgb::zeros(), 1.0);
            for g in &gs {
                let d = px - g.center;
                let a = (g.opacity * (-0.5 * d.dot(&(g.inv_cov * d))).exp()).min(0.999);
                if a < 1.0 / 255.0 {
                    continue;
                }
                color += g.color * (a * trans);
                trans *= 1.0 - a;
            }
            rgb.set(u, v, color);
            alpha.set(u, v, 1.0 - trans);
        }
    }
    (rgb, alpha)
}

/// Random view plus 1..=max_count Gaussians placed inside its frustum.
pub fn random_splat_scene(
    rng: &mut impl Rng,
    max_count: usize,
    size: usize,
    opacity: (f64, f64),
) -> (GaussianCloud, CameraPose, PerspectiveViewSpec) {
    let pose = CameraPose::from_rotation(
        Rotation3::from_euler_angles(rng.random_range(-0.5..0.5), rng.random_range(-3.0..3.0), rng.random_range(-0.3..0.3)),
        Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0)),
    );
    let spec = PerspectiveViewSpec::new(
        rng.random_range(-3.0..3.0),
        rng.random_range(-0.6..0.6),
        rng.random_range(1.0..1.8),
        size,
    )
    .unwrap();
    let view = pose.compose_view(&spec);
    let count = rng.random_range(1..=max_count);
    let gaussians = (0..count)
        .map(|_| {
            let z = rng.random_range(1.0..6.0);
            let local = Vec3::new(rng.random_range(-0.6..0.6) * z, rng.random_range(-0.6..0.6) * z, z);
            Gaussian {
                mean: view.to_world(&local) + view.position(),
                scale: Vec3::new(rng.random_range(0.05..0.8), rng.random_range(0.05..0.8), rng.random_range(0.02..0.8)),
                rotation: UnitQuaternion::from_euler_angles(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)),
                opacity: rng.random_range(opacity.0..=opacity.1),
                color: Rgb::new(rng.random(), rng.random(), rng.random()),
            }
        })
        .collect();
    (GaussianCloud::new(gaussians).unwrap(), pose, spec)
}

pub fn max_abs_diff(a: &RgbImage, b: &RgbImage) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs().max()).fold(0.0, f64::max)
}

// ------------------------------------------------------------ finite differences

/// L1 loss written directly from its definition.
pub fn oracle_l1(a: &RgbImage, b: &RgbImage) -> f64 {
    let s: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs().sum()).sum();
    s / (3 * a.as_slice().len()) as f64
}

/// Relative error with both sides treated as zero below `1e-10`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-10 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Whether any pixel alpha lies within a relative `band` of the 1/255
/// cutoff, where the loss is discontinuous in opacity.
pub fn near_alpha_cutoff(cloud: &GaussianCloud, pose: &CameraPose, spec: &PerspectiveViewSpec, band: f64) -> bool {
    let projected = panoworld::splat::project_cloud(cloud, pose, spec);
    let n = spec.size;
    projected.iter().any(|p| {
        (0..n).any(|v| {
            (0..n).any(|u| {
                let a = p.opacity * p.falloff(u as f64 + 0.5, v as f64 + 0.5);
                (a * 255.0 - 1.0).abs() < band
            })
        })
    })
}

/// Target that differs from `render` by at least `min_offset` per channel,
/// keeping the L1 loss away from its kinks.
pub fn offset_target(render: &RgbImage, rng: &mut impl Rng, min_offset: f64) -> RgbImage {
    render.map(|c| {
        c.map(|v| {
            let off = rng.random_range(min_offset..4.0 * min_offset);
            if rng.random::<bool>() {
                v + off
            } else {
                v - off
            }
        })
    })
}

// ------------------------------------------------------------ alignment harness

/// Triangles of the mesh built from `depth` at `pose`, skipping faces with a
/// flagged vertex.
pub fn visible_surface(depth: &RayDepthMap, pose: &CameraPose) -> TriangleBvh {
    let pano = PanoFrame::from_fn(depth.width(), depth.height(), |_, _| Rgb::zeros()).unwrap();
    let mesh = build_scene_mesh(&pano, depth, pose, DEFAULT_TAU).unwrap();
    let tris = (0..mesh.faces.len())
        .filter(|&f| mesh.face_visible(f))
        .map(|f| mesh.face_positions(f))
        .collect();
    TriangleBvh::new(tris)
}

/// Self-consistent keyframe depths: frame 0 is exact scene depth, and every
/// later pixel takes its distance from the earliest earlier surface it hits
/// (falling back to the scene). These are the distances a perfect
/// registration reproduces.
pub fn consistent_depths(scene: &SyntheticScene, poses: &[CameraPose], w: usize, h: usize) -> Vec<RayDepthMap> {
    let mut depths = Vec::new();
    let mut surfaces: Vec<TriangleBvh> = Vec::new();
    for pose in poses {
        let origin = pose.position();
        let map = RayDepthMap::from_fn(w, h, |col, row| {
            let d = pose.rotation() * oracle_direction(col as f64 + 0.5, row as f64 + 0.5, w, h);
            surfaces
                .iter()
                .find_map(|s| s.intersect(&origin, &d, 1e-9))
                .map(|hit| hit.t)
                .unwrap_or_else(|| scene.ray_distance(&origin, &d))
        })
        .unwrap();
        surfaces.push(visible_surface(&map, pose));
        depths.push(map);
    }
    depths
}

pub fn random_keyframe_poses(rng: &mut impl Rng, count: usize) -> Vec<CameraPose> {
    let mut poses = vec![CameraPose::identity()];
    for _ in 1..count {
        poses.push(CameraPose::from_rotation(
            Rotation3::from_axis_angle(&Vector3::y_axis(), rng.random_range(-3.0..3.0)),
            Vec3::new(rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0), rng.random_range(-1.5..1.0)),
        ));
    }
    poses
}
