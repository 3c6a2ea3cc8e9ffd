//! File formats: PFM depth, trajectory/scene/config JSON, binary PLY for
//! meshes and Gaussians, PNG images and masks, `.npy` Plücker maps.
//!
//! Every writer goes through [`atomic_write`]; readers reject malformed input
//! rather than repairing it. The one documented repair is rotation
//! re-orthonormalization within [`ROTATION_TOLERANCE`].

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Point2, Quaternion, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, Rgb, RgbImage};
use crate::mesh::{Aabb, SceneMesh, DEFAULT_TAU};
use crate::pano::{CameraPose, PanoFrame, PlueckerMap, RayDepthMap, Trajectory, Vec3};
use crate::route::{RouteParams, WalkablePointSet};
use crate::splat::{logit, sigmoid, Gaussian, GaussianCloud};

/// Orthonormality tolerance accepted when reading rotations from JSON.
pub const ROTATION_TOLERANCE: f64 = 1e-6;

/// Zeroth-order spherical-harmonic constant used by the community splat layout.
pub const SH_C0: f64 = 0.282_094_791_773_878_14;

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

/// Writes via a sibling temp file and rename so readers never see partial output.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::domain(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------- PFM

pub fn encode_depth_pfm(map: &RayDepthMap) -> Vec<u8> {
    let (w, h) = (map.width(), map.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * w * h);
    for row in (0..h).rev() {
        for col in 0..w {
            out.extend_from_slice(&(map.get(col, row) as f32).to_le_bytes());
        }
    }
    out
}

/// Splits off one `\n`-terminated header line, tracking the byte offset.
fn header_line<'a>(bytes: &'a [u8], offset: &mut usize, name: &str) -> Result<&'a str> {
    let start = *offset;
    let end = bytes[start..]
        .iter()
        .position(|&b| b == b'\n')
        .map(|p| start + p)
        .ok_or_else(|| Error::format(name, start, "unterminated header line"))?;
    *offset = end + 1;
    std::str::from_utf8(&bytes[start..end]).map_err(|_| Error::format(name, start, "header is not ASCII"))
}

pub fn decode_depth_pfm(bytes: &[u8], name: &str) -> Result<RayDepthMap> {
    let mut offset = 0;
    if header_line(bytes, &mut offset, name)? != "Pf" {
        return Err(Error::format(name, 0, "expected grayscale PFM magic 'Pf'"));
    }
    let dims_at = offset;
    let dims: Vec<&str> = header_line(bytes, &mut offset, name)?.split_whitespace().collect();
    let parse = |s: &str| s.parse::<usize>().ok().filter(|&v| v > 0);
    let (w, h) = match dims.as_slice() {
        [a, b] => match (parse(a), parse(b)) {
            (Some(w), Some(h)) => (w, h),
            _ => return Err(Error::format(name, dims_at, "invalid dimensions")),
        },
        _ => return Err(Error::format(name, dims_at, "expected '<width> <height>'")),
    };
    let scale_at = offset;
    let scale: f64 = header_line(bytes, &mut offset, name)?
        .trim()
        .parse()
        .map_err(|_| Error::format(name, scale_at, "invalid scale"))?;
    if !(scale < 0.0) {
        return Err(Error::format(name, scale_at, "only little-endian PFM (negative scale) is supported"));
    }
    let expected = offset + 4 * w * h;
    if bytes.len() != expected {
        return Err(Error::format(
            name,
            bytes.len().min(expected),
            format!("expected {} bytes of samples, found {}", 4 * w * h, bytes.len() - offset),
        ));
    }
    let mut values = vec![0.0; w * h];
    for (k, chunk) in bytes[offset..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("chunk of 4")) as f64;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::format(name, offset + 4 * k, format!("depth must be positive and finite, got {v}")));
        }
        let (row_from_bottom, col) = (k / w, k % w);
        values[(h - 1 - row_from_bottom) * w + col] = v;
    }
    RayDepthMap::new(Grid::from_vec(w, h, values)?)
}

pub fn write_depth_pfm(map: &RayDepthMap, path: &Path) -> Result<()> {
    atomic_write(path, &encode_depth_pfm(map))
}

pub fn read_depth_pfm(path: &Path) -> Result<RayDepthMap> {
    decode_depth_pfm(&read_bytes(path)?, &path_str(path))
}

// ---------------------------------------------------------------- trajectory JSON

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    rotation: [f64; 9],
    position: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryRecord {
    frames: Vec<FrameRecord>,
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable value");
    out.push(b'\n');
    out
}

fn json_error(name: &str, e: serde_json::Error) -> Error {
    Error::format(name, 0, format!("line {} column {}: {e}", e.line(), e.column()))
}

pub fn encode_trajectory_json(traj: &Trajectory) -> Vec<u8> {
    let frames = traj
        .poses()
        .iter()
        .map(|p| {
            let r = p.rotation().matrix();
            let t = p.position();
            FrameRecord {
                rotation: std::array::from_fn(|k| r[(k / 3, k % 3)]),
                position: [t.x, t.y, t.z],
            }
        })
        .collect();
    to_json(&TrajectoryRecord { frames })
}

/// Projects a near-rotation onto SO(3) via the polar decomposition.
fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    u * vt
}

pub fn decode_trajectory_json(bytes: &[u8], name: &str) -> Result<Trajectory> {
    let record: TrajectoryRecord = serde_json::from_slice(bytes).map_err(|e| json_error(name, e))?;
    let mut poses = Vec::with_capacity(record.frames.len());
    for (i, f) in record.frames.iter().enumerate() {
        let m = Matrix3::from_row_slice(&f.rotation);
        let position = Vec3::from(f.position);
        let ortho_err = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if !(ortho_err <= ROTATION_TOLERANCE && (det - 1.0).abs() <= ROTATION_TOLERANCE) || !position.iter().all(|v| v.is_finite()) {
            return Err(Error::format(
                name,
                0,
                format!("frame {i}: not a proper rotation (orthonormality error {ortho_err:.3e}, det {det:.6})"),
            ));
        }
        poses.push(CameraPose::new(orthonormalize(&m), position)?);
    }
    Trajectory::new(poses).map_err(|_| Error::format(name, 0, "trajectory has no frames"))
}

pub fn write_trajectory_json(traj: &Trajectory, path: &Path) -> Result<()> {
    atomic_write(path, &encode_trajectory_json(traj))
}

pub fn read_trajectory_json(path: &Path) -> Result<Trajectory> {
    decode_trajectory_json(&read_bytes(path)?, &path_str(path))
}

// ---------------------------------------------------------------- PLY

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyType {
    U8,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "uchar" | "uint8" => PlyType::U8,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::U8 => 1,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            PlyType::U8 => b[0] as f64,
            PlyType::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyType::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyType::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyType::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlyProperty {
    Scalar { name: String, ty: PlyType },
    List { name: String, count: PlyType, item: PlyType },
}

impl PlyProperty {
    pub fn name(&self) -> &str {
        match self {
            PlyProperty::Scalar { name, .. } | PlyProperty::List { name, .. } => name,
        }
    }
}

/// One element block of a decoded PLY file. Scalar properties become
/// one-entry rows, list properties their items.
#[derive(Debug, Clone, PartialEq)]
pub struct PlyElement {
    pub name: String,
    pub properties: Vec<PlyProperty>,
    pub rows: Vec<Vec<Vec<f64>>>,
}

impl PlyElement {
    pub fn property_index(&self, name: &str) -> Option<usize> {
        self.properties.iter().position(|p| p.name() == name)
    }

    fn column(&self, name: &str, file: &str) -> Result<Vec<f64>> {
        let k = self
            .property_index(name)
            .ok_or_else(|| Error::format(file, 0, format!("element '{}' lacks property '{name}'", self.name)))?;
        Ok(self.rows.iter().map(|r| r[k][0]).collect())
    }
}

/// Minimal binary little-endian PLY reader covering the layouts written here.
pub fn decode_ply(bytes: &[u8], name: &str) -> Result<Vec<PlyElement>> {
    let mut offset = 0;
    if header_line(bytes, &mut offset, name)? != "ply" {
        return Err(Error::format(name, 0, "missing 'ply' magic"));
    }
    let mut elements: Vec<(PlyElement, usize)> = Vec::new();
    loop {
        let at = offset;
        let line = header_line(bytes, &mut offset, name)?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["end_header"] => break,
            ["format", "binary_little_endian", "1.0"] => {}
            ["format", ..] => return Err(Error::format(name, at, "only binary_little_endian 1.0 is supported")),
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", ename, count] => {
                let count = count.parse().map_err(|_| Error::format(name, at, "invalid element count"))?;
                elements.push((
                    PlyElement {
                        name: ename.to_string(),
                        properties: Vec::new(),
                        rows: Vec::new(),
                    },
                    count,
                ));
            }
            ["property", "list", c, i, pname] => {
                let (count, item) = PlyType::parse(c)
                    .zip(PlyType::parse(i))
                    .ok_or_else(|| Error::format(name, at, "unsupported list property type"))?;
                let (el, _) = elements.last_mut().ok_or_else(|| Error::format(name, at, "property before element"))?;
                el.properties.push(PlyProperty::List {
                    name: pname.to_string(),
                    count,
                    item,
                });
            }
            ["property", ty, pname] => {
                let ty = PlyType::parse(ty).ok_or_else(|| Error::format(name, at, "unsupported property type"))?;
                let (el, _) = elements.last_mut().ok_or_else(|| Error::format(name, at, "property before element"))?;
                el.properties.push(PlyProperty::Scalar {
                    name: pname.to_string(),
                    ty,
                });
            }
            _ => return Err(Error::format(name, at, format!("unrecognized header line '{line}'"))),
        }
    }
    let truncated = |at: usize| Error::format(name, at, "unexpected end of data");
    let mut out = Vec::with_capacity(elements.len());
    for (mut el, count) in elements {
        for _ in 0..count {
            let mut row = Vec::with_capacity(el.properties.len());
            for p in &el.properties {
                match *p {
                    PlyProperty::Scalar { ty, .. } => {
                        let b = bytes.get(offset..offset + ty.size()).ok_or_else(|| truncated(offset))?;
                        row.push(vec![ty.read(b)]);
                        offset += ty.size();
                    }
                    PlyProperty::List { count, item, .. } => {
                        let b = bytes.get(offset..offset + count.size()).ok_or_else(|| truncated(offset))?;
                        let n = count.read(b) as usize;
                        offset += count.size();
                        let mut items = Vec::with_capacity(n);
                        for _ in 0..n {
                            let b = bytes.get(offset..offset + item.size()).ok_or_else(|| truncated(offset))?;
                            items.push(item.read(b));
                            offset += item.size();
                        }
                        row.push(items);
                    }
                }
            }
            el.rows.push(row);
        }
        out.push(el);
    }
    if offset != bytes.len() {
        return Err(Error::format(name, offset, "trailing bytes after last element"));
    }
    Ok(out)
}

pub fn read_ply(path: &Path) -> Result<Vec<PlyElement>> {
    decode_ply(&read_bytes(path)?, &path_str(path))
}

fn to_u8(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_mesh_ply(mesh: &SceneMesh) -> Vec<u8> {
    let header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nproperty uchar visible\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.faces.len()
    );
    let mut out = header.into_bytes();
    for v in &mesh.vertices {
        for k in 0..3 {
            out.extend_from_slice(&(v.position[k] as f32).to_le_bytes());
        }
        out.extend([to_u8(v.color.x), to_u8(v.color.y), to_u8(v.color.z), v.visible as u8]);
    }
    for f in &mesh.faces {
        out.push(3);
        for &i in f {
            out.extend_from_slice(&(i as i32).to_le_bytes());
        }
    }
    out
}

pub fn write_mesh_ply(mesh: &SceneMesh, path: &Path) -> Result<()> {
    atomic_write(path, &encode_mesh_ply(mesh))
}

/// Property names of the community splat layout, in file order.
pub const GAUSSIAN_PLY_PROPERTIES: [&str; 17] = [
    "x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1", "scale_2", "rot_0",
    "rot_1", "rot_2", "rot_3",
];

/// Keeps stored logits finite for opacities at the ends of [0, 1].
const OPACITY_LOGIT_EPS: f64 = 1e-7;

pub fn encode_gaussians_ply(cloud: &GaussianCloud) -> Vec<u8> {
    let mut out = format!("ply\nformat binary_little_endian 1.0\nelement vertex {}\n", cloud.len()).into_bytes();
    for p in GAUSSIAN_PLY_PROPERTIES {
        out.extend(format!("property float {p}\n").bytes());
    }
    out.extend(b"end_header\n");
    for g in &cloud.gaussians {
        let q = g.rotation.quaternion();
        let values = [
            g.mean.x,
            g.mean.y,
            g.mean.z,
            0.0,
            0.0,
            0.0,
            (g.color.x - 0.5) / SH_C0,
            (g.color.y - 0.5) / SH_C0,
            (g.color.z - 0.5) / SH_C0,
            logit(g.opacity.clamp(OPACITY_LOGIT_EPS, 1.0 - OPACITY_LOGIT_EPS)),
            g.scale.x.ln(),
            g.scale.y.ln(),
            g.scale.z.ln(),
            q.w,
            q.i,
            q.j,
            q.k,
        ];
        for v in values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_gaussians_ply(bytes: &[u8], name: &str) -> Result<GaussianCloud> {
    let elements = decode_ply(bytes, name)?;
    let vertex = elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| Error::format(name, 0, "no vertex element"))?;
    let cols: Vec<Vec<f64>> = GAUSSIAN_PLY_PROPERTIES
        .iter()
        .map(|p| vertex.column(p, name))
        .collect::<Result<_>>()?;
    let gaussians = (0..vertex.rows.len())
        .map(|i| {
            let c = |k: usize| cols[k][i];
            Gaussian {
                mean: Vec3::new(c(0), c(1), c(2)),
                color: Rgb::new(c(6), c(7), c(8)).map(|f| (0.5 + SH_C0 * f).clamp(0.0, 1.0)),
                opacity: sigmoid(c(9)),
                scale: Vec3::new(c(10).exp(), c(11).exp(), c(12).exp()),
                rotation: UnitQuaternion::from_quaternion(Quaternion::new(c(13), c(14), c(15), c(16))),
            }
        })
        .collect();
    GaussianCloud::new(gaussians).map_err(|e| Error::format(name, 0, e.to_string()))
}

pub fn write_gaussians_ply(cloud: &GaussianCloud, path: &Path) -> Result<()> {
    atomic_write(path, &encode_gaussians_ply(cloud))
}

pub fn read_gaussians_ply(path: &Path) -> Result<GaussianCloud> {
    decode_gaussians_ply(&read_bytes(path)?, &path_str(path))
}

// ---------------------------------------------------------------- PNG

fn encode_png(buf: &[u8], w: usize, h: usize, color: image::ExtendedColorType) -> Result<Vec<u8>> {
    use image::ImageEncoder;
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(buf, w as u32, h as u32, color)
        .map_err(|e| Error::domain(format!("png encoding failed: {e}")))?;
    Ok(out)
}

pub fn write_rgb_png(img: &RgbImage, path: &Path) -> Result<()> {
    let buf: Vec<u8> = img.as_slice().iter().flat_map(|c| [to_u8(c.x), to_u8(c.y), to_u8(c.z)]).collect();
    atomic_write(path, &encode_png(&buf, img.width(), img.height(), image::ExtendedColorType::Rgb8)?)
}

/// Masks are 8-bit grayscale with values 0 (invalid) and 255 (valid).
pub fn write_mask_png(mask: &Mask, path: &Path) -> Result<()> {
    let buf: Vec<u8> = mask.as_slice().iter().map(|&m| if m { 255 } else { 0 }).collect();
    atomic_write(path, &encode_png(&buf, mask.width(), mask.height(), image::ExtendedColorType::L8)?)
}

fn decode_image(path: &Path) -> Result<image::DynamicImage> {
    let bytes = read_bytes(path)?;
    image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(path_str(path), 0, format!("invalid PNG: {e}")))
}

pub fn read_rgb_png(path: &Path) -> Result<RgbImage> {
    let img = decode_image(path)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img
        .pixels()
        .map(|p| Rgb::new(p[0] as f64, p[1] as f64, p[2] as f64) / 255.0)
        .collect();
    RgbImage::from_vec(w, h, data)
}

pub fn read_mask_png(path: &Path) -> Result<Mask> {
    let img = decode_image(path)?.into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut data = Vec::with_capacity(w * h);
    for (k, p) in img.pixels().enumerate() {
        match p[0] {
            0 => data.push(false),
            255 => data.push(true),
            v => return Err(Error::format(path_str(path), 0, format!("mask pixel {k} has value {v}, expected 0 or 255"))),
        }
    }
    Grid::from_vec(w, h, data)
}

pub fn read_pano_png(path: &Path) -> Result<PanoFrame> {
    PanoFrame::new(read_rgb_png(path)?)
}

// ---------------------------------------------------------------- NPY

/// Little-endian f64 array of shape (H, W, 6).
pub fn encode_pluecker_npy(map: &PlueckerMap) -> Vec<u8> {
    let mut header = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}, 6), }}",
        map.height(),
        map.width()
    );
    // Magic (6) + version (2) + length (2) + header + '\n' must be a multiple of 64.
    let pad = (64 - (10 + header.len() + 1) % 64) % 64;
    header.extend(std::iter::repeat_n(' ', pad));
    header.push('\n');
    let mut out = b"\x93NUMPY\x01\x00".to_vec();
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend(header.bytes());
    for v in map.as_slice().iter().flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_pluecker_npy(map: &PlueckerMap, path: &Path) -> Result<()> {
    atomic_write(path, &encode_pluecker_npy(map))
}

// ---------------------------------------------------------------- scene and config JSON

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleRecord {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

/// Route-sampling input: walkable floor samples `(u, v)` mapping to world
/// `(u, plane_height, v)`, plus obstacle boxes. Units are meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub walkable_points: Vec<[f64; 2]>,
    pub obstacles: Vec<ObstacleRecord>,
    pub plane_height: f64,
    #[serde(default = "meters")]
    pub units: String,
}

fn meters() -> String {
    "meters".to_string()
}

impl SceneFile {
    pub fn from_parts(points: &WalkablePointSet, boxes: &[Aabb]) -> Self {
        Self {
            walkable_points: points.points.iter().map(|p| [p.x, p.y]).collect(),
            obstacles: boxes
                .iter()
                .map(|b| ObstacleRecord {
                    min: b.min.into(),
                    max: b.max.into(),
                })
                .collect(),
            plane_height: points.plane_height,
            units: meters(),
        }
    }

    pub fn walkable(&self) -> WalkablePointSet {
        WalkablePointSet::new(
            self.walkable_points.iter().map(|p| Point2::new(p[0], p[1])).collect(),
            self.plane_height,
        )
    }

    pub fn boxes(&self) -> Result<Vec<Aabb>> {
        self.obstacles.iter().map(|o| Aabb::new(o.min.into(), o.max.into())).collect()
    }
}

pub fn read_scene_json(path: &Path) -> Result<SceneFile> {
    let name = path_str(path);
    let scene: SceneFile = serde_json::from_slice(&read_bytes(path)?).map_err(|e| json_error(&name, e))?;
    if scene.units != "meters" {
        return Err(Error::format(name, 0, format!("unsupported units '{}'", scene.units)));
    }
    let finite = scene.walkable_points.iter().flatten().all(|v| v.is_finite()) && scene.plane_height.is_finite();
    if !finite {
        return Err(Error::format(name, 0, "non-finite coordinate"));
    }
    scene.boxes().map_err(|e| Error::format(&name, 0, e.to_string()))?;
    Ok(scene)
}

pub fn write_scene_json(scene: &SceneFile, path: &Path) -> Result<()> {
    atomic_write(path, &to_json(scene))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    atomic_write(path, &to_json(value))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub iters: usize,
    pub lr: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { iters: 500, lr: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub min_len: f64,
    pub frames: usize,
    pub lambda: f64,
    pub iters: usize,
    pub step: f64,
    pub margin: f64,
    pub camera_height: f64,
    pub max_attempts: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        let p = RouteParams::default();
        Self {
            min_len: p.min_len,
            frames: p.frames,
            lambda: p.lambda,
            iters: p.iters,
            step: p.step,
            margin: p.margin,
            camera_height: p.camera_height,
            max_attempts: p.max_attempts,
        }
    }
}

/// Settings shared by all command-line stages. Every field is optional in
/// the JSON file; command-line flags override file values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub width: usize,
    pub height: usize,
    pub tau: f64,
    pub keyframe_stride: usize,
    pub optimizer: OptimizerConfig,
    pub sampler: SamplerConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            width: 1024,
            height: 512,
            tau: DEFAULT_TAU,
            keyframe_stride: 5,
            optimizer: OptimizerConfig::default(),
            sampler: SamplerConfig::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.sampler;
        let checks = [
            (self.width == 2 * self.height && self.height >= 2, "resolution must satisfy width = 2 * height >= 4"),
            (self.tau > 0.0 && self.tau.is_finite(), "tau must be positive"),
            (self.keyframe_stride >= 1, "keyframe_stride must be >= 1"),
            (self.optimizer.lr > 0.0 && self.optimizer.lr.is_finite(), "optimizer.lr must be positive"),
            (s.min_len >= 0.0 && s.min_len.is_finite(), "sampler.min_len must be >= 0"),
            (s.frames >= 2, "sampler.frames must be >= 2"),
            (s.lambda > 0.0 && s.lambda <= 1.0, "sampler.lambda must lie in (0, 1]"),
            (s.step > 0.0 && s.step.is_finite(), "sampler.step must be positive"),
            (s.margin >= 0.0 && s.margin.is_finite(), "sampler.margin must be >= 0"),
            (s.camera_height.is_finite(), "sampler.camera_height must be finite"),
            (s.max_attempts >= 1, "sampler.max_attempts must be >= 1"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::domain(*msg)),
            None => Ok(()),
        }
    }

    pub fn route_params(&self) -> RouteParams {
        let s = &self.sampler;
        RouteParams {
            min_len: s.min_len,
            frames: s.frames,
            lambda: s.lambda,
            iters: s.iters,
            step: s.step,
            margin: s.margin,
            camera_height: s.camera_height,
            seed: self.seed,
            max_attempts: s.max_attempts,
        }
    }
}

pub fn read_config_json(path: &Path) -> Result<PipelineConfig> {
    let name = path_str(path);
    serde_json::from_slice(&read_bytes(path)?).map_err(|e| json_error(&name, e))
}

/// `dir/prefix_0007.png`-style numbered frame path.
pub fn numbered_path(dir: &Path, prefix: &str, index: usize, ext: &str) -> PathBuf {
    dir.join(format!("{prefix}_{index:04}.{ext}"))
}
