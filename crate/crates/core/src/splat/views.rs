//! Supervision-view sampling along a trajectory.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{Rotation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pano::{CameraPose, PerspectiveViewSpec, Trajectory};

pub const MIN_VIEW_FOV_DEG: f64 = 60.0;
pub const MAX_VIEW_FOV_DEG: f64 = 120.0;
pub const REFERENCE_VIEW_SIZE: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewCategory {
    Context,
    Interpolated,
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceView {
    /// Panorama-camera pose the view is cropped from.
    pub pose: CameraPose,
    /// Crop orientation relative to `pose`.
    pub spec: PerspectiveViewSpec,
    pub category: ViewCategory,
    /// Trajectory segment and blend parameter the pose came from.
    pub source: (usize, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceViewSet {
    pub views: Vec<ReferenceView>,
}

impl ReferenceViewSet {
    pub fn count(&self, category: ViewCategory) -> usize {
        self.views.iter().filter(|v| v.category == category).count()
    }
}

/// Slerp on rotation, lerp on position. `t = 0` and `t = 1` return the
/// endpoints exactly.
pub fn interpolate_pose(a: &CameraPose, b: &CameraPose, t: f64) -> CameraPose {
    if t == 0.0 {
        return *a;
    }
    if t == 1.0 {
        return *b;
    }
    let qa = UnitQuaternion::from_rotation_matrix(a.rotation());
    let qb = UnitQuaternion::from_rotation_matrix(b.rotation());
    let q = qa.slerp(&qb, t);
    let position = a.position() + (b.position() - a.position()) * t;
    CameraPose::from_rotation(q.to_rotation_matrix(), position)
}

fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let t: f64 = rng.random();
        if t > 0.0 {
            return t;
        }
    }
}

fn random_spec(rng: &mut impl Rng) -> PerspectiveViewSpec {
    let fov = rng.random_range(MIN_VIEW_FOV_DEG..=MAX_VIEW_FOV_DEG).to_radians();
    PerspectiveViewSpec {
        yaw: rng.random_range(-PI..PI),
        pitch: rng.random_range(-FRAC_PI_4..=FRAC_PI_4),
        fov,
        size: REFERENCE_VIEW_SIZE,
    }
}

/// Draws `count` views: half on trajectory poses, a quarter interpolated
/// between adjacent poses, the rest extrapolated past the last pose by up to
/// half of the final segment.
pub fn sample_reference_views(traj: &Trajectory, count: usize, seed: u64) -> Result<ReferenceViewSet> {
    let poses = traj.poses();
    let n = poses.len();
    if n < 2 {
        return Err(Error::domain("reference-view sampling needs at least 2 poses"));
    }
    let context = count / 2;
    let interpolated = (count - context) / 2;
    let extrapolated = count - context - interpolated;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut views = Vec::with_capacity(count);
    for _ in 0..context {
        let i = rng.random_range(0..n);
        let spec = random_spec(&mut rng);
        views.push(ReferenceView {
            pose: poses[i],
            spec,
            category: ViewCategory::Context,
            source: (i, 0.0),
        });
    }
    for _ in 0..interpolated {
        let i = rng.random_range(0..n - 1);
        let t = loop {
            let t = open_unit(&mut rng);
            if t < 1.0 {
                break t;
            }
        };
        let spec = random_spec(&mut rng);
        views.push(ReferenceView {
            pose: interpolate_pose(&poses[i], &poses[i + 1], t),
            spec,
            category: ViewCategory::Interpolated,
            source: (i, t),
        });
    }
    let (prev, last) = (&poses[n - 2], &poses[n - 1]);
    for _ in 0..extrapolated {
        let t = 0.5 * open_unit(&mut rng);
        let spec = random_spec(&mut rng);
        let position = last.position() + (last.position() - prev.position()) * t;
        views.push(ReferenceView {
            pose: CameraPose::from_rotation(Rotation3::from(*last.rotation()), position),
            spec,
            category: ViewCategory::Extrapolated,
            source: (n - 1, t),
        });
    }
    Ok(ReferenceViewSet { views })
}
