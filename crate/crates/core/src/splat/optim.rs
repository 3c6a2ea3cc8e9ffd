//! Color and opacity optimization against perspective supervision crops.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cloud::GaussianCloud;
use super::raster::loss_gradients;
use crate::error::{Error, Result};
use crate::grid::{Rgb, RgbImage};
use crate::pano::{CameraPose, PerspectiveViewSpec};

/// Lower bound kept on opacity so a Gaussian never drops out of the
/// compositing (and gradient) path for good.
const OPACITY_FLOOR: f64 = 0.01;

/// Learning rate decays exponentially to `lr * LR_FINAL_RATIO` at the last step.
const LR_FINAL_RATIO: f64 = 1e-3;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingView {
    pub pose: CameraPose,
    pub spec: PerspectiveViewSpec,
    pub target: RgbImage,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub iters: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            iters: 500,
            lr: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub cloud: GaussianCloud,
    pub iteration: usize,
    /// Loss of the sampled view before each update.
    pub loss_history: Vec<f64>,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    m: f64,
    v: f64,
}

impl Moments {
    fn step(&mut self, grad: f64, lr: f64, t: i32) -> f64 {
        self.m = BETA1 * self.m + (1.0 - BETA1) * grad;
        self.v = BETA2 * self.v + (1.0 - BETA2) * grad * grad;
        let m_hat = self.m / (1.0 - BETA1.powi(t));
        let v_hat = self.v / (1.0 - BETA2.powi(t));
        lr * m_hat / (v_hat.sqrt() + ADAM_EPS)
    }
}

/// Adam on color and opacity with geometry frozen; one uniformly drawn view
/// per step. Parameters are clamped back into range after every update.
pub fn optimize_gaussians(cloud: &GaussianCloud, views: &[TrainingView], config: &OptimConfig) -> Result<OptimState> {
    if views.is_empty() {
        return Err(Error::domain("optimization needs at least one view"));
    }
    if !(config.lr > 0.0) {
        return Err(Error::domain(format!("learning rate must be positive, got {}", config.lr)));
    }
    let mut cloud = cloud.clone();
    let n = cloud.len();
    let mut color_moments = vec![[Moments::default(); 3]; n];
    let mut opacity_moments = vec![Moments::default(); n];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = Vec::with_capacity(config.iters);
    for step in 0..config.iters {
        let view = &views[rng.random_range(0..views.len())];
        let grads = loss_gradients(&cloud, &view.pose, &view.spec, &view.target)?;
        history.push(grads.loss);
        let lr = config.lr * LR_FINAL_RATIO.powf(step as f64 / config.iters.max(1) as f64);
        let t = step as i32 + 1;
        for (i, g) in cloud.gaussians.iter_mut().enumerate() {
            let gc = grads.color[i];
            let go = grads.opacity[i];
            if gc == Rgb::zeros() && go == 0.0 && color_moments[i][0].m == 0.0 && opacity_moments[i].m == 0.0 {
                continue;
            }
            for k in 0..3 {
                g.color[k] = (g.color[k] - color_moments[i][k].step(gc[k], lr, t)).clamp(0.0, 1.0);
            }
            g.opacity = (g.opacity - opacity_moments[i].step(go, lr, t)).clamp(OPACITY_FLOOR, 1.0);
        }
    }
    Ok(OptimState {
        cloud,
        iteration: config.iters,
        loss_history: history,
    })
}
