//! Keyframe selection, sequential least-squares depth-scale registration and
//! point fusion.

use crate::bvh::TriangleBvh;
use crate::error::{Error, Result};
use crate::grid::Rgb;
use crate::mesh::{detect_discontinuities, grid_faces, unproject_pixel, DEFAULT_TAU};
use crate::pano::{pixel_center_direction, CameraPose, PanoFrame, RayDepthMap, Vec3};

/// Indices `0, stride, 2 * stride, ...` below `frame_count`.
pub fn select_keyframes(frame_count: usize, stride: usize) -> Result<Vec<usize>> {
    if frame_count == 0 || stride == 0 {
        return Err(Error::domain(format!(
            "keyframe selection needs frame_count >= 1 and stride >= 1, got {frame_count} and {stride}"
        )));
    }
    Ok((0..frame_count).step_by(stride).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignOptions {
    /// Discontinuity threshold; faces touching flagged pixels are not hit.
    pub tau: f64,
    /// Only every `pixel_stride`-th row and column casts a ray.
    pub pixel_stride: usize,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            pixel_stride: 1,
        }
    }
}

pub fn align_depth_scales(depths: &[RayDepthMap], poses: &[CameraPose]) -> Result<Vec<f64>> {
    align_depth_scales_with(depths, poses, &AlignOptions::default())
}

fn surface_bvh(depth: &RayDepthMap, pose: &CameraPose, scale: f64, tau: f64) -> Result<TriangleBvh> {
    let (w, h) = (depth.width(), depth.height());
    let flags = detect_discontinuities(depth, tau)?;
    let mut positions = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            positions.push(unproject_pixel(pose, col, row, w, h, scale * depth.get(col, row)));
        }
    }
    let valid = |i: u32| !flags.as_slice()[i as usize];
    let tris = grid_faces(w, h)
        .into_iter()
        .filter(|f| f.iter().all(|&i| valid(i)))
        .map(|f| f.map(|i| positions[i as usize]))
        .collect();
    Ok(TriangleBvh::new(tris))
}

/// Recovers one scale factor per keyframe, frame 0 fixed at 1.
///
/// Frames are registered in order. Each pixel ray of frame `k` is cast
/// against the surfaces of the already-aligned frames, taking the nearest hit
/// on the earliest frame that has one; the closed-form least-squares scale
/// `Σ d_exp d_k / Σ d_k²` is then taken over all pixels with a hit.
pub fn align_depth_scales_with(depths: &[RayDepthMap], poses: &[CameraPose], opts: &AlignOptions) -> Result<Vec<f64>> {
    if depths.is_empty() || depths.len() != poses.len() {
        return Err(Error::domain(format!(
            "alignment needs matching non-empty depth and pose lists, got {} and {}",
            depths.len(),
            poses.len()
        )));
    }
    if opts.pixel_stride == 0 {
        return Err(Error::domain("pixel stride must be at least 1"));
    }
    let mut scales = vec![1.0];
    let mut surfaces = vec![surface_bvh(&depths[0], &poses[0], 1.0, opts.tau)?];
    for k in 1..depths.len() {
        let depth = &depths[k];
        let pose = &poses[k];
        let (w, h) = (depth.width(), depth.height());
        let origin = pose.position();
        let (mut num, mut den) = (0.0, 0.0);
        for row in (0..h).step_by(opts.pixel_stride) {
            for col in (0..w).step_by(opts.pixel_stride) {
                let dir = pose.to_world(pixel_center_direction(col, row, w, h).as_vec());
                let hit = surfaces.iter().find_map(|s| s.intersect(&origin, &dir, 1e-9));
                if let Some(hit) = hit {
                    let d = depth.get(col, row);
                    num += hit.t * d;
                    den += d * d;
                }
            }
        }
        if den == 0.0 {
            return Err(Error::AlignmentFailure { frame: k });
        }
        let scale = num / den;
        scales.push(scale);
        if k + 1 < depths.len() {
            surfaces.push(surface_bvh(depth, pose, scale, opts.tau)?);
        }
    }
    Ok(scales)
}

/// A colored world point with the ray distance it was unprojected at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedPoint {
    pub position: Vec3,
    pub color: Rgb,
    pub distance: f64,
}

/// Unprojects every `stride`-th pixel (both axes) of every keyframe at its
/// aligned scale, dropping discontinuity pixels. No deduplication.
pub fn fuse_point_cloud(
    panos: &[PanoFrame],
    depths: &[RayDepthMap],
    scales: &[f64],
    poses: &[CameraPose],
    stride: usize,
    tau: f64,
) -> Result<Vec<FusedPoint>> {
    let n = panos.len();
    if depths.len() != n || scales.len() != n || poses.len() != n {
        return Err(Error::domain("fusion inputs must have equal lengths"));
    }
    if stride == 0 {
        return Err(Error::domain("fusion stride must be at least 1"));
    }
    let mut points = Vec::new();
    for k in 0..n {
        let (pano, depth) = (&panos[k], &depths[k]);
        pano.image().check_same_size(depth.grid())?;
        let flags = detect_discontinuities(depth, tau)?;
        let (w, h) = (pano.width(), pano.height());
        for row in (0..h).step_by(stride) {
            for col in (0..w).step_by(stride) {
                if *flags.get(col, row) {
                    continue;
                }
                let distance = scales[k] * depth.get(col, row);
                points.push(FusedPoint {
                    position: unproject_pixel(&poses[k], col, row, w, h, distance),
                    color: pano.pixel(col, row),
                    distance,
                });
            }
        }
    }
    Ok(points)
}
