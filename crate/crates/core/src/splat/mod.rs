//! Panoramic Gaussian reconstruction: keyframe selection, depth-scale
//! registration, point fusion, Gaussian initialization and attribute-grid
//! decoding, perspective splat rendering with analytic color/opacity
//! gradients, and the L1 optimization loop.

mod align;
mod cloud;
mod optim;
mod raster;
mod views;

pub use align::{
    align_depth_scales, align_depth_scales_with, fuse_point_cloud, select_keyframes, AlignOptions,
    FusedPoint,
};
pub use cloud::{
    decode_attribute_grid, encode_attribute_grid, init_gaussians, logit, sigmoid, Gaussian,
    GaussianCloud, GsAttributeGrid, ATTRIBUTE_CHANNELS, INIT_OPACITY,
};
pub use optim::{optimize_gaussians, OptimConfig, OptimState, TrainingView};
pub use raster::{
    l1_loss, loss_gradients, project_cloud, render_gaussians, GaussianGradients, ProjectedGaussian,
    SplatImage, ALPHA_MAX, ALPHA_MIN, FRUSTUM_GUARD, SPLAT_NEAR,
};
pub use views::{interpolate_pose, sample_reference_views, ReferenceView, ReferenceViewSet, ViewCategory};
