//! Z-buffered software rasterization of a [`SceneMesh`] into perspective
//! views, and cubemap stitching into equirectangular guidance frames with a
//! validity mask.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::Result;
use crate::grid::{Grid, Mask, Rgb, RgbImage};
use crate::mesh::SceneMesh;
use crate::pano::{
    check_pano_dims, pixel_center_direction, CameraPose, PanoFrame, PerspectiveViewSpec,
    Trajectory, Vec3,
};

/// Geometry closer than this to the camera plane is clipped away.
pub const NEAR_PLANE: f64 = 1e-3;

/// Minimum cube face resolution used for guidance rendering.
pub const MIN_FACE_SIZE: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct RasterOutput {
    pub rgb: RgbImage,
    pub mask: Mask,
    /// Ray distance to the camera center, `+inf` where nothing was drawn.
    pub zbuffer: Grid<f64>,
    /// Index of the front-most face per pixel.
    pub face: Grid<Option<u32>>,
}

impl RasterOutput {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            rgb: Grid::filled(width, height, Rgb::zeros()),
            mask: Grid::filled(width, height, false),
            zbuffer: Grid::filled(width, height, f64::INFINITY),
            face: Grid::filled(width, height, None),
        }
    }
}

/// Equirectangular RGB with its binary validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedFrame {
    pub rgb: PanoFrame,
    pub mask: Mask,
}

/// A stitched guidance frame together with its per-pixel ray distance and
/// winning face indices.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchedFrame {
    pub frame: MaskedFrame,
    pub zbuffer: Grid<f64>,
    pub face: Grid<Option<u32>>,
}

#[derive(Clone, Copy)]
struct ClipVertex {
    p: Vec3,
    bary: Vec3,
}

fn clip_near(tri: [ClipVertex; 3], out: &mut Vec<ClipVertex>) {
    out.clear();
    for k in 0..3 {
        let a = tri[k];
        let b = tri[(k + 1) % 3];
        let a_in = a.p.z >= NEAR_PLANE;
        let b_in = b.p.z >= NEAR_PLANE;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (NEAR_PLANE - a.p.z) / (b.p.z - a.p.z);
            out.push(ClipVertex {
                p: a.p + (b.p - a.p) * t,
                bary: a.bary + (b.bary - a.bary) * t,
            });
        }
    }
}

/// Rasterizes `mesh` as seen through `spec` oriented relative to `pose`.
///
/// Coverage is evaluated at pixel centers with closed edges; the depth test
/// keeps the smallest ray distance, first face winning exact ties. Colors are
/// interpolated perspective-correctly from the vertices.
pub fn rasterize_perspective(mesh: &SceneMesh, pose: &CameraPose, spec: &PerspectiveViewSpec) -> RasterOutput {
    let size = spec.size;
    let mut out = RasterOutput::empty(size, size);
    if mesh.is_empty() {
        return out;
    }
    let view = pose.compose_view(spec);
    let local: Vec<Vec3> = mesh
        .vertices
        .iter()
        .map(|v| view.world_to_camera(&v.position))
        .collect();
    let focal = spec.focal();
    let center = size as f64 / 2.0;
    let limit = size as f64;
    let mut poly = Vec::with_capacity(4);

    for (fi, face) in mesh.faces.iter().enumerate() {
        let idx = face.map(|i| i as usize);
        let p = idx.map(|i| local[i]);
        if p.iter().all(|q| q.z < NEAR_PLANE) {
            continue;
        }
        // Cheap reject when the whole triangle lies outside one side plane.
        let t = (limit - center) / focal;
        if p.iter().all(|q| q.x > t * q.z.max(0.0) + 1e-12 && q.z > 0.0)
            || p.iter().all(|q| -q.x > t * q.z.max(0.0) + 1e-12 && q.z > 0.0)
            || p.iter().all(|q| q.y > t * q.z.max(0.0) + 1e-12 && q.z > 0.0)
            || p.iter().all(|q| -q.y > t * q.z.max(0.0) + 1e-12 && q.z > 0.0)
        {
            continue;
        }
        let tri = [
            ClipVertex { p: p[0], bary: Vec3::x() },
            ClipVertex { p: p[1], bary: Vec3::y() },
            ClipVertex { p: p[2], bary: Vec3::z() },
        ];
        clip_near(tri, &mut poly);
        if poly.len() < 3 {
            continue;
        }
        let colors = idx.map(|i| mesh.vertices[i].color);
        let visible = mesh.face_visible(fi);
        for k in 1..poly.len() - 1 {
            raster_triangle(
                [poly[0], poly[k], poly[k + 1]],
                focal,
                center,
                size,
                &colors,
                visible,
                fi as u32,
                &mut out,
            );
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn raster_triangle(
    tri: [ClipVertex; 3],
    focal: f64,
    center: f64,
    size: usize,
    colors: &[Rgb; 3],
    visible: bool,
    face_id: u32,
    out: &mut RasterOutput,
) {
    let s = tri.map(|v| (focal * v.p.x / v.p.z + center, focal * v.p.y / v.p.z + center));
    let area = (s[1].0 - s[0].0) * (s[2].1 - s[0].1) - (s[1].1 - s[0].1) * (s[2].0 - s[0].0);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    let min_x = s.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let max_x = s.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let min_y = s.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let max_y = s.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    if max_x < 0.5 || max_y < 0.5 || min_x > size as f64 - 0.5 || min_y > size as f64 - 0.5 {
        return;
    }
    let u0 = (min_x - 0.5).ceil().max(0.0) as usize;
    let v0 = (min_y - 0.5).ceil().max(0.0) as usize;
    let u1 = ((max_x - 0.5).floor() as i64).min(size as i64 - 1);
    let v1 = ((max_y - 0.5).floor() as i64).min(size as i64 - 1);
    if u1 < u0 as i64 || v1 < v0 as i64 {
        return;
    }
    let inv_z = tri.map(|v| 1.0 / v.p.z);
    let edge = |a: (f64, f64), b: (f64, f64), px: f64, py: f64| {
        (b.0 - a.0) * (py - a.1) - (b.1 - a.1) * (px - a.0)
    };
    for v in v0..=v1 as usize {
        let py = v as f64 + 0.5;
        for u in u0..=u1 as usize {
            let px = u as f64 + 0.5;
            let l0 = edge(s[1], s[2], px, py) / area;
            let l1 = edge(s[2], s[0], px, py) / area;
            let l2 = edge(s[0], s[1], px, py) / area;
            if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
                continue;
            }
            let w = [l0 * inv_z[0], l1 * inv_z[1], l2 * inv_z[2]];
            let norm = w[0] + w[1] + w[2];
            let point = (tri[0].p * w[0] + tri[1].p * w[1] + tri[2].p * w[2]) / norm;
            let dist = point.norm();
            let zb = out.zbuffer.get_mut(u, v);
            if dist < *zb {
                *zb = dist;
                let bary = (tri[0].bary * w[0] + tri[1].bary * w[1] + tri[2].bary * w[2]) / norm;
                let color = colors[0] * bary.x + colors[1] * bary.y + colors[2] * bary.z;
                out.rgb.set(u, v, color);
                out.mask.set(u, v, visible);
                out.face.set(u, v, Some(face_id));
            }
        }
    }
}

/// The six axis-aligned cube directions of a camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeFace {
    Front,
    Back,
    Left,
    Right,
    Up,
    Down,
}

impl CubeFace {
    pub const ALL: [CubeFace; 6] = [
        CubeFace::Front,
        CubeFace::Back,
        CubeFace::Left,
        CubeFace::Right,
        CubeFace::Up,
        CubeFace::Down,
    ];

    /// Yaw and pitch orienting a view along this face's axis
    /// (front +Z, right +X, up -Y).
    pub fn yaw_pitch(self) -> (f64, f64) {
        match self {
            CubeFace::Front => (0.0, 0.0),
            CubeFace::Back => (PI, 0.0),
            CubeFace::Left => (-FRAC_PI_2, 0.0),
            CubeFace::Right => (FRAC_PI_2, 0.0),
            CubeFace::Up => (0.0, FRAC_PI_2),
            CubeFace::Down => (0.0, -FRAC_PI_2),
        }
    }

    /// Face whose axis has the largest absolute component in `d`.
    pub fn select(d: &Vec3) -> CubeFace {
        let (ax, ay, az) = (d.x.abs(), d.y.abs(), d.z.abs());
        if az >= ax && az >= ay {
            if d.z >= 0.0 {
                CubeFace::Front
            } else {
                CubeFace::Back
            }
        } else if ax >= ay {
            if d.x >= 0.0 {
                CubeFace::Right
            } else {
                CubeFace::Left
            }
        } else if d.y < 0.0 {
            CubeFace::Up
        } else {
            CubeFace::Down
        }
    }

    fn index(self) -> usize {
        CubeFace::ALL.iter().position(|&f| f == self).unwrap()
    }
}

/// View spec for one cube face: the central `face_size` pixels span exactly
/// 90°, with a one-pixel skirt on every side so stitching can interpolate
/// across face borders.
pub fn cube_face_spec(face: CubeFace, face_size: usize) -> PerspectiveViewSpec {
    let half = face_size as f64 / 2.0;
    let (yaw, pitch) = face.yaw_pitch();
    PerspectiveViewSpec {
        yaw,
        pitch,
        fov: 2.0 * ((half + 1.0) / half).atan(),
        size: face_size + 2,
    }
}

/// Renders the six cube faces (in [`CubeFace::ALL`] order) around `pose`.
pub fn render_cubemap(mesh: &SceneMesh, pose: &CameraPose, face_size: usize) -> Vec<RasterOutput> {
    let face_size = face_size.max(1);
    CubeFace::ALL
        .iter()
        .map(|&f| rasterize_perspective(mesh, pose, &cube_face_spec(f, face_size)))
        .collect()
}

/// Stitches six skirted cube faces into an equirectangular frame in the
/// cubemap's camera frame. RGB is bilinear; mask, depth and face ids use the
/// nearest face pixel.
pub fn cubemap_to_equirect(faces: &[RasterOutput], width: usize, height: usize) -> Result<StitchedFrame> {
    check_pano_dims(width, height)?;
    if faces.len() != 6 {
        return Err(crate::error::Error::domain(format!(
            "expected 6 cube faces, got {}",
            faces.len()
        )));
    }
    let size = faces[0].rgb.width();
    let face_size = size - 2;
    let specs: Vec<_> = CubeFace::ALL.iter().map(|&f| cube_face_spec(f, face_size)).collect();
    let inverse: Vec<_> = specs.iter().map(|s| s.rotation().inverse()).collect();

    let mut rgb = Grid::filled(width, height, Rgb::zeros());
    let mut mask = Grid::filled(width, height, false);
    let mut zbuffer = Grid::filled(width, height, f64::INFINITY);
    let mut face_ids = Grid::filled(width, height, None);
    let max = (size - 1) as f64;
    for row in 0..height {
        for col in 0..width {
            let d = pixel_center_direction(col, row, width, height).into_vec();
            let fi = CubeFace::select(&d).index();
            let q = inverse[fi] * d;
            let (x, y) = specs[fi]
                .project(&q)
                .expect("selected face always sees the direction");
            let src = &faces[fi];
            let u = (x - 0.5).clamp(0.0, max);
            let v = (y - 0.5).clamp(0.0, max);
            let (u0, v0) = (u.floor() as usize, v.floor() as usize);
            let (u1, v1) = ((u0 + 1).min(size - 1), (v0 + 1).min(size - 1));
            let (fu, fv) = (u - u0 as f64, v - v0 as f64);
            let top = src.rgb.get(u0, v0) * (1.0 - fu) + src.rgb.get(u1, v0) * fu;
            let bottom = src.rgb.get(u0, v1) * (1.0 - fu) + src.rgb.get(u1, v1) * fu;
            let color = top * (1.0 - fv) + bottom * fv;
            rgb.set(col, row, color.map(|c| c.clamp(0.0, 1.0)));

            let nu = (x.floor().max(0.0) as usize).min(size - 1);
            let nv = (y.floor().max(0.0) as usize).min(size - 1);
            mask.set(col, row, *src.mask.get(nu, nv));
            zbuffer.set(col, row, *src.zbuffer.get(nu, nv));
            face_ids.set(col, row, *src.face.get(nu, nv));
        }
    }
    Ok(StitchedFrame {
        frame: MaskedFrame {
            rgb: PanoFrame::new(rgb)?,
            mask,
        },
        zbuffer,
        face: face_ids,
    })
}

/// Cube face resolution used for an equirect frame of the given height.
pub fn guidance_face_size(height: usize) -> usize {
    height.div_ceil(2).max(MIN_FACE_SIZE)
}

/// Renders a single guidance frame at `pose`, keeping depth and face ids.
pub fn render_guidance_frame(mesh: &SceneMesh, pose: &CameraPose, width: usize, height: usize) -> Result<StitchedFrame> {
    check_pano_dims(width, height)?;
    let faces = render_cubemap(mesh, pose, guidance_face_size(height));
    cubemap_to_equirect(&faces, width, height)
}

/// Renders the trajectory-guidance video: one masked equirect frame per pose.
pub fn render_guidance_video(mesh: &SceneMesh, traj: &Trajectory, width: usize, height: usize) -> Result<Vec<MaskedFrame>> {
    traj.poses()
        .iter()
        .map(|pose| render_guidance_frame(mesh, pose, width, height).map(|s| s.frame))
        .collect()
}
