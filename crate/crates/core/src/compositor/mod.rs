//! Sort-last compositing: visibility ordering, binary swap across workers,
//! the final merge and the timed end-to-end pipeline.

mod bench;
mod merge;
mod over;
mod pipeline;
mod swap;

pub use bench::{bench_sweep, read_bench_csv, write_bench_csv, BenchRow, BENCH_HEADER};
pub use merge::{merge, quantize};
pub use over::{composite_serial, over_images, over_pixel};
pub use pipeline::{run_pipeline, BlockSource, PipelineInput, PipelineOutput, StageTimings};
pub use swap::{
    binary_swap, visibility_order, OwnedRange, SwapOutcome, VisibilityOrder, WorkerTopology,
};
