//! Ray casting of one block into a premultiplied-alpha partial image.

mod camera;
pub mod doc;
mod image;
mod raycast;
mod tf;

pub use camera::{intersect_aabb, make_rays, Aabb, Camera, Ray, RayGenerator};
pub use image::{PartialImage, RgbImage};
pub use raycast::{
    opacity_correct, render_block, AnalyticSource, GridSource, RayCastConfig, RenderRequest,
    Shading, VolumeSource,
};
pub use tf::{presets, TfNode, TransferFunction, TF_TABLE_SIZE};
