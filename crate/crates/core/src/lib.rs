//! Block-wise functional volume visualization.
//!
//! A scalar volume is split into blocks by recursive bisection, each block is
//! encoded as a tensor-product B-spline model, and the models are ray cast in
//! parallel by independent workers whose partial images are merged with
//! binary-swap compositing. Baseline reconstruction filters, image/volume
//! quality metrics and the model file format live here as well.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiation.

pub mod compositor;
pub mod dataset;
pub mod error;
pub mod field;
pub mod metrics;
pub mod mfa;
pub mod render;
pub mod scalar;
pub mod timing;

pub use error::{Error, Result};
pub use scalar::Real;

pub use compositor::{
    binary_swap, merge, over_images, run_pipeline, visibility_order, BlockSource, PipelineInput,
    PipelineOutput, StageTimings, VisibilityOrder, WorkerTopology,
};
pub use dataset::{encode_dataset, Dataset, DatasetManifest};
pub use field::{
    downsample, generate_marschner_lobb, gradient_baseline, load_raw, partition, sample_baseline,
    save_raw, Block, BlockDecomposition, Filter, MarschnerLobb, RawDtype, ScalarGrid3D,
};
pub use metrics::{image_metrics, volume_psnr, QualityReport};
pub use mfa::{
    compression_ratio, encode_adaptive, encode_fixed, load_model, save_model, CtrlSpec,
    EncodeConfig, KnotVector, MfaModel,
};
pub use render::{
    make_rays, opacity_correct, render_block, Aabb, Camera, PartialImage, RayCastConfig,
    RenderRequest, RgbImage, Shading, TransferFunction, VolumeSource,
};

/// Double-precision scalar grid.
pub type Grid64 = ScalarGrid3D<f64>;
/// Single-precision scalar grid.
pub type Grid32 = ScalarGrid3D<f32>;
/// Double-precision B-spline model.
pub type Model64 = MfaModel<f64>;
/// Single-precision B-spline model.
pub type Model32 = MfaModel<f32>;
/// Double-precision knot vector.
pub type Knots64 = KnotVector<f64>;
