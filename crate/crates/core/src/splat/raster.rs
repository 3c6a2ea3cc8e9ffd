//! Perspective splatting: EWA projection, depth-sorted front-to-back alpha
//! compositing, and analytic L1 gradients for color and opacity.

use nalgebra::{Matrix2, Matrix2x3, Vector2};

use super::cloud::GaussianCloud;
use crate::error::{Error, Result};
use crate::grid::{Grid, Rgb, RgbImage};
use crate::pano::{CameraPose, PerspectiveViewSpec};

/// Gaussians whose camera-space depth is at or below this are skipped.
pub const SPLAT_NEAR: f64 = 0.01;
/// Per-pixel alpha clamp.
pub const ALPHA_MAX: f64 = 0.999;
/// Contributions with alpha below this are dropped.
pub const ALPHA_MIN: f64 = 1.0 / 255.0;
/// Centers beyond this multiple of the half-fov tangent are culled. Near the
/// image plane the affine approximation inflates splats to cover the view.
pub const FRUSTUM_GUARD: f64 = 1.3;
/// Regularization added to a singular 2D covariance diagonal.
const COV_REG: f64 = 1e-6;

const TILE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedGaussian {
    pub index: usize,
    pub depth: f64,
    pub center: Vector2<f64>,
    /// Inverse 2D covariance.
    pub conic: Matrix2<f64>,
    pub opacity: f64,
    pub color: Rgb,
    /// Inclusive pixel bounds `[u0, u1] x [v0, v1]` where alpha can reach
    /// [`ALPHA_MIN`].
    pub bounds: (usize, usize, usize, usize),
}

impl ProjectedGaussian {
    /// Gaussian falloff `exp(-q/2)` at pixel center `(u, v)`.
    #[inline]
    pub fn falloff(&self, px: f64, py: f64) -> f64 {
        let d = Vector2::new(px - self.center.x, py - self.center.y);
        let q = d.dot(&(self.conic * d));
        (-0.5 * q).exp()
    }
}

/// Projects, culls and depth-sorts the cloud for a view. Ties in depth keep
/// the input order.
pub fn project_cloud(cloud: &GaussianCloud, pose: &CameraPose, spec: &PerspectiveViewSpec) -> Vec<ProjectedGaussian> {
    let view = pose.compose_view(spec);
    let world_to_cam = view.rotation().inverse().into_inner();
    let f = spec.focal();
    let c = spec.size as f64 / 2.0;
    let size = spec.size;
    let guard = FRUSTUM_GUARD * (spec.fov / 2.0).tan();
    let mut out = Vec::new();
    for (index, g) in cloud.gaussians.iter().enumerate() {
        let t = view.world_to_camera(&g.mean);
        if t.z <= SPLAT_NEAR || (t.x / t.z).abs() > guard || (t.y / t.z).abs() > guard {
            continue;
        }
        let peak = g.opacity.min(ALPHA_MAX);
        if peak < ALPHA_MIN {
            continue;
        }
        let jac = Matrix2x3::new(
            f / t.z,
            0.0,
            -f * t.x / (t.z * t.z),
            0.0,
            f / t.z,
            -f * t.y / (t.z * t.z),
        );
        let cov_cam = world_to_cam * g.covariance() * world_to_cam.transpose();
        let mut cov = jac * cov_cam * jac.transpose();
        cov[(0, 1)] = 0.5 * (cov[(0, 1)] + cov[(1, 0)]);
        cov[(1, 0)] = cov[(0, 1)];
        let det = cov.determinant();
        if !(det > 0.0) || !det.is_finite() || det < 1e-12 {
            cov[(0, 0)] += COV_REG;
            cov[(1, 1)] += COV_REG;
        }
        let Some(conic) = cov.try_inverse() else {
            continue;
        };
        let center = Vector2::new(f * t.x / t.z + c, f * t.y / t.z + c);
        // Ellipse where opacity * exp(-q/2) >= ALPHA_MIN, plus a pixel of slack.
        let q_max = 2.0 * (peak / ALPHA_MIN).ln() + 1e-9;
        let rx = (q_max * cov[(0, 0)]).sqrt() + 1.0;
        let ry = (q_max * cov[(1, 1)]).sqrt() + 1.0;
        if !rx.is_finite() || !ry.is_finite() {
            continue;
        }
        let (x0, x1) = (center.x - rx - 0.5, center.x + rx - 0.5);
        let (y0, y1) = (center.y - ry - 0.5, center.y + ry - 0.5);
        if x1 < 0.0 || y1 < 0.0 || x0 > (size - 1) as f64 || y0 > (size - 1) as f64 {
            continue;
        }
        out.push(ProjectedGaussian {
            index,
            depth: t.z,
            center,
            conic,
            opacity: g.opacity,
            color: g.color,
            bounds: (
                x0.ceil().max(0.0) as usize,
                (x1.floor() as i64).min(size as i64 - 1) as usize,
                y0.ceil().max(0.0) as usize,
                (y1.floor() as i64).min(size as i64 - 1) as usize,
            ),
        });
    }
    out.sort_by(|a, b| a.depth.partial_cmp(&b.depth).unwrap().then(a.index.cmp(&b.index)));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplatImage {
    pub rgb: RgbImage,
    pub alpha: Grid<f64>,
}

struct Tiles {
    cols: usize,
    lists: Vec<Vec<u32>>,
}

fn bin_tiles(projected: &[ProjectedGaussian], size: usize) -> Tiles {
    let cols = size.div_ceil(TILE);
    let mut lists = vec![Vec::new(); cols * cols];
    for (k, p) in projected.iter().enumerate() {
        let (u0, u1, v0, v1) = p.bounds;
        for ty in v0 / TILE..=v1 / TILE {
            for tx in u0 / TILE..=u1 / TILE {
                lists[ty * cols + tx].push(k as u32);
            }
        }
    }
    Tiles { cols, lists }
}

/// One composited layer at a pixel.
#[derive(Debug, Clone, Copy)]
struct Layer {
    k: usize,
    alpha: f64,
    falloff: f64,
    clamped: bool,
    transmittance: f64,
}

fn pixel_layers(projected: &[ProjectedGaussian], list: &[u32], u: usize, v: usize, layers: &mut Vec<Layer>) -> (Rgb, f64) {
    layers.clear();
    let (px, py) = (u as f64 + 0.5, v as f64 + 0.5);
    let mut color = Rgb::zeros();
    let mut trans = 1.0;
    for &k in list {
        let p = &projected[k as usize];
        let (u0, u1, v0, v1) = p.bounds;
        if u < u0 || u > u1 || v < v0 || v > v1 {
            continue;
        }
        let g = p.falloff(px, py);
        let raw = p.opacity * g;
        let clamped = raw > ALPHA_MAX;
        let alpha = raw.min(ALPHA_MAX);
        if alpha < ALPHA_MIN {
            continue;
        }
        layers.push(Layer {
            k: k as usize,
            alpha,
            falloff: g,
            clamped,
            transmittance: trans,
        });
        color += p.color * (alpha * trans);
        trans *= 1.0 - alpha;
    }
    (color, trans)
}

/// Renders the cloud through `spec` oriented relative to `pose` on a black
/// background.
pub fn render_gaussians(cloud: &GaussianCloud, pose: &CameraPose, spec: &PerspectiveViewSpec) -> SplatImage {
    let size = spec.size;
    let projected = project_cloud(cloud, pose, spec);
    let tiles = bin_tiles(&projected, size);
    let mut rgb = Grid::filled(size, size, Rgb::zeros());
    let mut alpha = Grid::filled(size, size, 0.0);
    let mut layers = Vec::new();
    for v in 0..size {
        for u in 0..size {
            let list = &tiles.lists[(v / TILE) * tiles.cols + u / TILE];
            let (c, t) = pixel_layers(&projected, list, u, v, &mut layers);
            rgb.set(u, v, c);
            alpha.set(u, v, 1.0 - t);
        }
    }
    SplatImage { rgb, alpha }
}

/// Mean absolute per-channel difference.
pub fn l1_loss(render: &RgbImage, target: &RgbImage) -> Result<f64> {
    render.check_same_size(target)?;
    if render.as_slice().is_empty() {
        return Err(Error::domain("cannot compute a loss over an empty image"));
    }
    let sum: f64 = render
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(a, b)| (a - b).abs().sum())
        .sum();
    Ok(sum / (3 * render.as_slice().len()) as f64)
}

/// Gradients of the L1 loss with respect to each Gaussian's color and opacity.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianGradients {
    pub loss: f64,
    pub color: Vec<Rgb>,
    pub opacity: Vec<f64>,
}

/// Forward render plus analytic backward pass through the compositing chain.
/// Means, scales and rotations receive no gradient.
pub fn loss_gradients(
    cloud: &GaussianCloud,
    pose: &CameraPose,
    spec: &PerspectiveViewSpec,
    target: &RgbImage,
) -> Result<GaussianGradients> {
    let size = spec.size;
    if target.width() != size || target.height() != size {
        return Err(Error::DimensionMismatch {
            expected_width: size,
            expected_height: size,
            width: target.width(),
            height: target.height(),
        });
    }
    let n = cloud.len();
    let mut grad_color = vec![Rgb::zeros(); n];
    let mut grad_opacity = vec![0.0; n];
    let projected = project_cloud(cloud, pose, spec);
    let tiles = bin_tiles(&projected, size);
    let norm = 1.0 / (3 * size * size) as f64;
    let mut loss = 0.0;
    let mut layers = Vec::new();
    for v in 0..size {
        for u in 0..size {
            let list = &tiles.lists[(v / TILE) * tiles.cols + u / TILE];
            let (c, _) = pixel_layers(&projected, list, u, v, &mut layers);
            let diff = c - target.get(u, v);
            loss += diff.abs().sum() * norm;
            let dl_dc = diff.map(|d| if d > 0.0 { norm } else if d < 0.0 { -norm } else { 0.0 });
            if dl_dc == Rgb::zeros() {
                continue;
            }
            // Color contributed by the layers behind the current one.
            let mut behind = Rgb::zeros();
            for layer in layers.iter().rev() {
                let p = &projected[layer.k];
                let weight = layer.alpha * layer.transmittance;
                grad_color[p.index] += dl_dc * weight;
                let dc_dalpha = p.color * layer.transmittance - behind / (1.0 - layer.alpha);
                if !layer.clamped {
                    grad_opacity[p.index] += dl_dc.dot(&dc_dalpha) * layer.falloff;
                }
                behind += p.color * weight;
            }
        }
    }
    Ok(GaussianGradients {
        loss,
        color: grad_color,
        opacity: grad_opacity,
    })
}
