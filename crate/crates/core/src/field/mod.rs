//! Discrete volumes: the sample lattice, synthetic data, block partitioning,
//! baseline reconstruction filters and raw file I/O.

pub(crate) mod filters;
mod grid;
mod marschner_lobb;
mod partition;
mod raw;

pub use filters::{gradient_baseline, kernel_weights, sample_baseline, Filter};
pub use grid::{downsample, ScalarGrid3D};
pub use marschner_lobb::{generate_marschner_lobb, MarschnerLobb};
pub use partition::{partition, partition_dims, Block, BlockDecomposition, SplitNode};
pub use raw::{
    load_raw, load_raw_with_sidecar, read_sidecar, save_raw, sidecar_path, write_sidecar, RawDtype,
    RawMeta,
};
