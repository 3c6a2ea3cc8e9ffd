use std::f64::consts::TAU;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};

use super::align::FusedPoint;
use crate::error::{Error, Result};
use crate::grid::Rgb;
use crate::pano::{pixel_center_direction, CameraPose, Vec3};

/// Opacity assigned to freshly initialized Gaussians.
pub const INIT_OPACITY: f64 = 0.8;

/// Raw channels per attribute-grid cell:
/// color ×3, scale ×3, rotation ×4 (w, x, y, z), opacity ×1, depth ×1.
pub const ATTRIBUTE_CHANNELS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: Vec3,
    pub scale: Vec3,
    pub rotation: UnitQuaternion<f64>,
    pub opacity: f64,
    pub color: Rgb,
}

impl Gaussian {
    /// World-space covariance `R S² Rᵀ`.
    pub fn covariance(&self) -> Matrix3<f64> {
        let r = self.rotation.to_rotation_matrix().into_inner();
        let s2 = Matrix3::from_diagonal(&self.scale.component_mul(&self.scale));
        r * s2 * r.transpose()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaussianCloud {
    pub gaussians: Vec<Gaussian>,
}

impl GaussianCloud {
    pub fn new(gaussians: Vec<Gaussian>) -> Result<Self> {
        let cloud = Self { gaussians };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, g) in self.gaussians.iter().enumerate() {
            let q = g.rotation.quaternion();
            let ok = g.mean.iter().all(|v| v.is_finite())
                && g.scale.iter().all(|&s| s > 0.0 && s.is_finite())
                && (q.norm() - 1.0).abs() <= 1e-9
                && (0.0..=1.0).contains(&g.opacity)
                && g.color.iter().all(|c| (0.0..=1.0).contains(c));
            if !ok {
                return Err(Error::domain(format!("gaussian {i} violates attribute ranges: {g:?}")));
            }
        }
        Ok(())
    }
}

/// One isotropic Gaussian per point with a one-pixel angular footprint for a
/// panorama `width` pixels wide.
pub fn init_gaussians(points: &[FusedPoint], width: usize) -> Result<GaussianCloud> {
    if points.is_empty() {
        return Err(Error::domain("cannot initialize Gaussians from an empty point set"));
    }
    let pixel_angle = TAU / width as f64;
    GaussianCloud::new(
        points
            .iter()
            .map(|p| Gaussian {
                mean: p.position,
                scale: Vec3::repeat(p.distance * pixel_angle),
                rotation: UnitQuaternion::identity(),
                opacity: INIT_OPACITY,
                color: p.color,
            })
            .collect(),
    )
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Per-pixel raw Gaussian attributes predicted over `frames` panoramic grids.
#[derive(Debug, Clone, PartialEq)]
pub struct GsAttributeGrid {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    /// `frames * height * width * 12` raw values, cell-major.
    pub values: Vec<f64>,
    pub poses: Vec<CameraPose>,
}

impl GsAttributeGrid {
    pub fn new(frames: usize, height: usize, width: usize, values: Vec<f64>, poses: Vec<CameraPose>) -> Result<Self> {
        if frames == 0 || height == 0 || width == 0 {
            return Err(Error::domain("attribute grid dimensions must be positive"));
        }
        if values.len() != frames * height * width * ATTRIBUTE_CHANNELS || poses.len() != frames {
            return Err(Error::domain(format!(
                "attribute grid {frames}x{height}x{width} needs {} values and {frames} poses, got {} and {}",
                frames * height * width * ATTRIBUTE_CHANNELS,
                values.len(),
                poses.len()
            )));
        }
        Ok(Self {
            frames,
            height,
            width,
            values,
            poses,
        })
    }

    pub fn cell(&self, t: usize, row: usize, col: usize) -> &[f64] {
        let base = ((t * self.height + row) * self.width + col) * ATTRIBUTE_CHANNELS;
        &self.values[base..base + ATTRIBUTE_CHANNELS]
    }
}

/// Activates each cell (sigmoid color and opacity, exp scale and depth,
/// normalized quaternion) and places its mean by sphere projection along the
/// cell's panorama ray.
pub fn decode_attribute_grid(grid: &GsAttributeGrid) -> Result<GaussianCloud> {
    let mut out = Vec::with_capacity(grid.frames * grid.height * grid.width);
    for t in 0..grid.frames {
        let pose = &grid.poses[t];
        for row in 0..grid.height {
            for col in 0..grid.width {
                let c = grid.cell(t, row, col);
                if let Some(channel) = c.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Decode { t, row, col, channel });
                }
                let q = Quaternion::new(c[6], c[7], c[8], c[9]);
                let norm = q.norm();
                if !(norm > 0.0) || !norm.is_finite() {
                    return Err(Error::Decode { t, row, col, channel: 6 });
                }
                let distance = c[11].exp();
                let scale = Vec3::new(c[3].exp(), c[4].exp(), c[5].exp());
                if !distance.is_finite() || scale.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                    let channel = if distance.is_finite() { 3 } else { 11 };
                    return Err(Error::Decode { t, row, col, channel });
                }
                let dir = pose.to_world(pixel_center_direction(col, row, grid.width, grid.height).as_vec());
                out.push(Gaussian {
                    mean: pose.position() + dir * distance,
                    scale,
                    rotation: UnitQuaternion::new_normalize(q),
                    opacity: sigmoid(c[10]),
                    color: Rgb::new(sigmoid(c[0]), sigmoid(c[1]), sigmoid(c[2])),
                });
            }
        }
    }
    GaussianCloud::new(out)
}

/// Inverse of [`decode_attribute_grid`] for clouds laid out one Gaussian per
/// cell in cell-major order. Only each mean's distance from its frame's
/// camera is stored; its direction is implied by the cell. Colors and
/// opacities must lie strictly inside (0, 1).
pub fn encode_attribute_grid(
    cloud: &GaussianCloud,
    poses: Vec<CameraPose>,
    height: usize,
    width: usize,
) -> Result<GsAttributeGrid> {
    let frames = poses.len();
    if cloud.len() != frames * height * width {
        return Err(Error::domain(format!(
            "cloud of {} Gaussians does not fill a {frames}x{height}x{width} grid",
            cloud.len()
        )));
    }
    let mut values = Vec::with_capacity(cloud.len() * ATTRIBUTE_CHANNELS);
    for (i, g) in cloud.gaussians.iter().enumerate() {
        let pose = &poses[i / (height * width)];
        let q = g.rotation.quaternion();
        values.extend(g.color.iter().map(|&c| logit(c)));
        values.extend(g.scale.iter().map(|s| s.ln()));
        values.extend([q.w, q.i, q.j, q.k]);
        values.push(logit(g.opacity));
        values.push((g.mean - pose.position()).norm().ln());
    }
    GsAttributeGrid::new(frames, height, width, values, poses)
}
