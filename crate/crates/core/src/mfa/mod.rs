//! Tensor-product B-spline models of scalar blocks: fitting, analytic value
//! and gradient queries, and the on-disk model format.

mod basis;
mod encode;
mod io;
mod knots;
mod linalg;
mod model;

pub use basis::{basis_funs, ders_basis_funs, MAX_DEGREE};
pub use encode::{
    encode, encode_adaptive, encode_fixed, AdaptiveOutcome, CtrlSpec, EncodeConfig, KnotPlacement,
    RoundStats,
};
pub use io::{load_model, model_file_size, save_model, MAGIC, VERSION};
pub use knots::KnotVector;
pub use model::{compression_ratio, MfaModel};
