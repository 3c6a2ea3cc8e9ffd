//! Equirectangular coordinate math, camera poses, perspective crops and
//! spherical Plücker embeddings.
//!
//! Camera frame: +X right, +Y down, +Z forward. A panorama pixel column maps
//! linearly to azimuth `phi` in [-pi, pi) and a row maps linearly to elevation
//! `theta` from +pi/2 (top row edge) to -pi/2 (bottom row edge).

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::grid::{Grid, Rgb, RgbImage};

pub type Vec3 = Vector3<f64>;

/// Directions closer than this to the ±Y axis have no defined azimuth.
pub const POLE_EPS: f64 = 1e-9;

/// A unit vector in 3D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vec3);

impl Direction {
    /// Normalizes `v`. Fails on zero or non-finite input.
    pub fn new(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::domain("direction must be finite and non-zero"));
        }
        Ok(Self(v / n))
    }

    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        Self(v)
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn into_vec(self) -> Vec3 {
        self.0
    }
}

impl From<Direction> for Vec3 {
    fn from(d: Direction) -> Self {
        d.0
    }
}

/// Azimuth / elevation pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoord {
    pub phi: f64,
    pub theta: f64,
}

impl SphericalCoord {
    /// Builds a coordinate, wrapping `phi` into [-pi, pi). `theta` must lie in
    /// [-pi/2, pi/2].
    pub fn new(phi: f64, theta: f64) -> Result<Self> {
        if !phi.is_finite() || !theta.is_finite() || theta.abs() > FRAC_PI_2 {
            return Err(Error::domain(format!(
                "invalid spherical coordinate phi={phi}, theta={theta}"
            )));
        }
        Ok(Self {
            phi: wrap_azimuth(phi),
            theta,
        })
    }

    pub fn to_direction(self) -> Direction {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Direction(Vec3::new(ct * sp, -st, ct * cp))
    }

    pub fn from_direction(d: &Direction) -> Self {
        let v = d.as_vec();
        let horizontal = v.x.hypot(v.z);
        let theta = (-v.y).atan2(horizontal);
        let phi = if horizontal < POLE_EPS {
            0.0
        } else {
            wrap_azimuth(v.x.atan2(v.z))
        };
        Self { phi, theta }
    }
}

fn wrap_azimuth(phi: f64) -> f64 {
    let wrapped = (phi + PI).rem_euclid(TAU) - PI;
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

/// Direction of the ray through continuous pixel coordinate `(x, y)` of a
/// `width` x `height` equirectangular image.
pub fn pixel_to_direction(x: f64, y: f64, width: usize, height: usize) -> Result<Direction> {
    let (w, h) = (width as f64, height as f64);
    if width == 0 || height == 0 || !(0.0..=w).contains(&x) || !(0.0..=h).contains(&y) {
        return Err(Error::domain(format!(
            "pixel ({x}, {y}) outside a {width}x{height} panorama"
        )));
    }
    Ok(pixel_to_direction_unchecked(x, y, w, h))
}

#[inline]
pub(crate) fn pixel_to_direction_unchecked(x: f64, y: f64, w: f64, h: f64) -> Direction {
    let phi = TAU * x / w - PI;
    let theta = FRAC_PI_2 - PI * y / h;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Direction(Vec3::new(ct * sp, -st, ct * cp))
}

/// Direction through the center of pixel `(col, row)`.
#[inline]
pub fn pixel_center_direction(col: usize, row: usize, width: usize, height: usize) -> Direction {
    pixel_to_direction_unchecked(col as f64 + 0.5, row as f64 + 0.5, width as f64, height as f64)
}

/// Inverse of [`pixel_to_direction`]. Returns `x` in [0, width) and `y` in
/// [0, height]. Directions at the poles map to `x = width / 2`.
pub fn direction_to_pixel(d: &Direction, width: usize, height: usize) -> (f64, f64) {
    let (w, h) = (width as f64, height as f64);
    let v = d.as_vec();
    let horizontal = v.x.hypot(v.z);
    let theta = (-v.y).atan2(horizontal);
    let y = (FRAC_PI_2 - theta) * h / PI;
    let x = if horizontal < POLE_EPS {
        w / 2.0
    } else {
        let mut x = (v.x.atan2(v.z) + PI) * w / TAU;
        if x >= w {
            x -= w;
        }
        if x < 0.0 {
            x += w;
        }
        x
    };
    (x, y)
}

/// Bilinear lookup in an equirectangular grid at continuous coordinates with
/// horizontal wraparound and vertical clamping.
pub fn sample_equirect<T>(image: &Grid<T>, x: f64, y: f64) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let (w, h) = (image.width(), image.height());
    let u = x - 0.5;
    let v = (y - 0.5).clamp(0.0, (h - 1) as f64);
    let u0 = u.floor();
    let v0 = v.floor();
    let fu = u - u0;
    let fv = v - v0;
    let c0 = (u0 as i64).rem_euclid(w as i64) as usize;
    let c1 = (c0 + 1) % w;
    let r0 = v0 as usize;
    let r1 = (r0 + 1).min(h - 1);
    let top = *image.get(c0, r0) * (1.0 - fu) + *image.get(c1, r0) * fu;
    let bottom = *image.get(c0, r1) * (1.0 - fu) + *image.get(c1, r1) * fu;
    top * (1.0 - fv) + bottom * fv
}

/// Equirectangular RGB panorama with `width = 2 * height`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanoFrame {
    image: RgbImage,
}

impl PanoFrame {
    pub fn new(image: RgbImage) -> Result<Self> {
        check_pano_dims(image.width(), image.height())?;
        if let Some(bad) = image
            .as_slice()
            .iter()
            .find(|c| c.iter().any(|v| !(0.0..=1.0).contains(v)))
        {
            return Err(Error::domain(format!(
                "panorama channel outside [0, 1]: {:?}",
                bad.as_slice()
            )));
        }
        Ok(Self { image })
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> Rgb) -> Result<Self> {
        Self::new(Grid::from_fn(width, height, f))
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn image(&self) -> &RgbImage {
        &self.image
    }

    pub fn into_image(self) -> RgbImage {
        self.image
    }

    pub fn pixel(&self, col: usize, row: usize) -> Rgb {
        *self.image.get(col, row)
    }

    pub fn sample(&self, x: f64, y: f64) -> Rgb {
        sample_equirect(&self.image, x, y)
    }

    pub fn sample_direction(&self, d: &Direction) -> Rgb {
        let (x, y) = direction_to_pixel(d, self.width(), self.height());
        self.sample(x, y)
    }
}

pub(crate) fn check_pano_dims(width: usize, height: usize) -> Result<()> {
    if height < 2 || width != 2 * height {
        return Err(Error::domain(format!(
            "panorama must satisfy W = 2H with H >= 2, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Per-pixel Euclidean distance along each pixel's ray, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct RayDepthMap {
    values: Grid<f64>,
}

impl RayDepthMap {
    pub fn new(values: Grid<f64>) -> Result<Self> {
        if values.width() == 0 || values.height() == 0 {
            return Err(Error::domain("depth map must be non-empty"));
        }
        if let Some((idx, v)) = values
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::domain(format!(
                "depth must be positive and finite, found {v} at pixel ({}, {})",
                idx % values.width(),
                idx / values.width()
            )));
        }
        Ok(Self { values })
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(Grid::from_fn(width, height, f))
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        *self.values.get(col, row)
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.values
    }

    /// Returns a copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.map(|v| v * factor))
    }
}

/// World-from-camera rigid transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    rotation: Rotation3<f64>,
    position: Vec3,
}

const ROTATION_TOL: f64 = 1e-9;

impl CameraPose {
    /// Validates that `rotation` is a proper rotation within 1e-9.
    pub fn new(rotation: Matrix3<f64>, position: Vec3) -> Result<Self> {
        Self::with_tolerance(rotation, position, ROTATION_TOL)
    }

    pub(crate) fn with_tolerance(rotation: Matrix3<f64>, position: Vec3, tol: f64) -> Result<Self> {
        if rotation.iter().chain(position.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("pose contains non-finite values"));
        }
        let det = rotation.determinant();
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if (det - 1.0).abs() > tol || ortho > tol {
            return Err(Error::domain(format!(
                "rotation is not orthonormal with det +1 (det={det:.3e}, |RᵀR-I|max={ortho:.3e})"
            )));
        }
        Ok(Self {
            rotation: Rotation3::from_matrix_unchecked(rotation),
            position,
        })
    }

    pub fn from_rotation(rotation: Rotation3<f64>, position: Vec3) -> Self {
        Self { rotation, position }
    }

    pub fn identity() -> Self {
        Self::from_rotation(Rotation3::identity(), Vec3::zeros())
    }

    pub fn at(position: Vec3) -> Self {
        Self::from_rotation(Rotation3::identity(), position)
    }

    pub fn rotation(&self) -> &Rotation3<f64> {
        &self.rotation
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    /// Rotates a camera-frame vector into the world frame.
    #[inline]
    pub fn to_world(&self, camera_dir: &Vec3) -> Vec3 {
        self.rotation * camera_dir
    }

    /// Maps a world point into this camera's frame.
    #[inline]
    pub fn world_to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation.inverse_transform_vector(&(p - self.position))
    }

    /// Pose of a perspective view looking along `spec` relative to this pose.
    pub fn compose_view(&self, spec: &PerspectiveViewSpec) -> CameraPose {
        CameraPose::from_rotation(self.rotation * spec.rotation(), self.position)
    }
}

/// Ordered sequence of camera poses.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    poses: Vec<CameraPose>,
}

impl Trajectory {
    pub fn new(poses: Vec<CameraPose>) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::domain("trajectory needs at least one pose"));
        }
        Ok(Self { poses })
    }

    pub fn poses(&self) -> &[CameraPose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

/// Square pinhole view oriented by yaw (about +Y) and pitch (about +X).
/// Positive pitch looks up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerspectiveViewSpec {
    pub yaw: f64,
    pub pitch: f64,
    pub fov: f64,
    pub size: usize,
}

impl PerspectiveViewSpec {
    pub fn new(yaw: f64, pitch: f64, fov: f64, size: usize) -> Result<Self> {
        if !(fov > 0.0 && fov < PI) || size == 0 || !yaw.is_finite() || !pitch.is_finite() {
            return Err(Error::domain(format!(
                "invalid view: yaw={yaw}, pitch={pitch}, fov={fov}, size={size}"
            )));
        }
        Ok(Self {
            yaw,
            pitch,
            fov,
            size,
        })
    }

    pub fn focal(&self) -> f64 {
        self.size as f64 / (2.0 * (self.fov / 2.0).tan())
    }

    /// Camera-from-view rotation: yaw applied after pitch.
    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vector3::y_axis(), self.yaw)
            * Rotation3::from_axis_angle(&Vector3::x_axis(), self.pitch)
    }

    /// Unnormalized view-frame ray through continuous image coordinate `(u, v)`.
    #[inline]
    pub fn pixel_ray(&self, u: f64, v: f64) -> Vec3 {
        let f = self.focal();
        let c = self.size as f64 / 2.0;
        Vec3::new((u - c) / f, (v - c) / f, 1.0)
    }

    /// Projects a view-frame point to continuous image coordinates. `None` for
    /// points on or behind the image plane's origin.
    #[inline]
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        let f = self.focal();
        let c = self.size as f64 / 2.0;
        Some((f * p.x / p.z + c, f * p.y / p.z + c))
    }

    /// Whether a view-frame direction lies inside the (closed) frustum.
    pub fn frustum_contains(&self, d: &Vec3) -> bool {
        if d.z <= 0.0 {
            return false;
        }
        let t = (self.fov / 2.0).tan();
        (d.x / d.z).abs() <= t && (d.y / d.z).abs() <= t
    }
}

/// Resamples the panorama into a perspective crop oriented in the panorama's
/// own camera frame.
pub fn pano_to_perspective(pano: &PanoFrame, spec: &PerspectiveViewSpec) -> RgbImage {
    let rot = spec.rotation();
    let (w, h) = (pano.width(), pano.height());
    Grid::from_fn(spec.size, spec.size, |u, v| {
        let ray = rot * spec.pixel_ray(u as f64 + 0.5, v as f64 + 0.5);
        let d = Direction::new_unchecked(ray.normalize());
        let (x, y) = direction_to_pixel(&d, w, h);
        pano.sample(x, y)
    })
}

/// Twelve perspective views covering the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct CropLayout {
    views: Vec<PerspectiveViewSpec>,
}

impl CropLayout {
    pub const VIEW_COUNT: usize = 12;

    pub fn new(views: Vec<PerspectiveViewSpec>) -> Result<Self> {
        if views.len() != Self::VIEW_COUNT {
            return Err(Error::domain(format!(
                "crop layout needs exactly {} views, got {}",
                Self::VIEW_COUNT,
                views.len()
            )));
        }
        Ok(Self { views })
    }

    pub fn views(&self) -> &[PerspectiveViewSpec] {
        &self.views
    }

    /// Same orientations with a different output size.
    pub fn with_size(&self, size: usize) -> Self {
        Self {
            views: self
                .views
                .iter()
                .map(|v| PerspectiveViewSpec { size, ..*v })
                .collect(),
        }
    }
}

/// Six horizon views every 60°, three views 45° up and three 45° down with
/// their yaws interleaved. All at 100° fov, 512 px.
pub fn default_crop_layout() -> CropLayout {
    let fov = 100f64.to_radians();
    let size = 512;
    let mut views = Vec::with_capacity(12);
    for k in 0..6 {
        views.push(PerspectiveViewSpec {
            yaw: (60.0 * k as f64).to_radians(),
            pitch: 0.0,
            fov,
            size,
        });
    }
    for k in 0..3 {
        views.push(PerspectiveViewSpec {
            yaw: (120.0 * k as f64).to_radians(),
            pitch: 45f64.to_radians(),
            fov,
            size,
        });
    }
    for k in 0..3 {
        views.push(PerspectiveViewSpec {
            yaw: (120.0 * k as f64 + 60.0).to_radians(),
            pitch: -45f64.to_radians(),
            fov,
            size,
        });
    }
    CropLayout { views }
}

/// Number of views whose frustum contains each equirect pixel center.
pub fn coverage_map(views: &[PerspectiveViewSpec], height: usize, width: usize) -> Grid<u32> {
    let inverse: Vec<_> = views.iter().map(|v| (v, v.rotation().inverse())).collect();
    Grid::from_fn(width, height, |col, row| {
        let d = pixel_center_direction(col, row, width, height).into_vec();
        inverse
            .iter()
            .filter(|(view, inv)| view.frustum_contains(&(*inv * d)))
            .count() as u32
    })
}

/// Per-pixel ray as (direction, moment) with moment = origin × direction.
#[derive(Debug, Clone, PartialEq)]
pub struct PlueckerMap {
    values: Grid<[f64; 6]>,
}

impl PlueckerMap {
    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn get(&self, col: usize, row: usize) -> [f64; 6] {
        *self.values.get(col, row)
    }

    pub fn direction(&self, col: usize, row: usize) -> Vec3 {
        let v = self.get(col, row);
        Vec3::new(v[0], v[1], v[2])
    }

    pub fn moment(&self, col: usize, row: usize) -> Vec3 {
        let v = self.get(col, row);
        Vec3::new(v[3], v[4], v[5])
    }

    pub fn as_slice(&self) -> &[[f64; 6]] {
        self.values.as_slice()
    }
}

/// Plücker coordinates of a single ray.
#[inline]
pub fn pluecker_ray(origin: &Vec3, direction: &Vec3) -> [f64; 6] {
    let m = origin.cross(direction);
    [direction.x, direction.y, direction.z, m.x, m.y, m.z]
}

pub fn pluecker_embedding(pose: &CameraPose, width: usize, height: usize) -> PlueckerMap {
    let origin = pose.position();
    PlueckerMap {
        values: Grid::from_fn(width, height, |col, row| {
            let d = pose.to_world(pixel_center_direction(col, row, width, height).as_vec());
            pluecker_ray(&origin, &d.normalize())
        }),
    }
}
