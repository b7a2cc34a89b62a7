use std::path::Path;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::compositor::merge;
use crate::compositor::over::over_slices;
use crate::compositor::swap::{binary_swap, visibility_order, VisibilityOrder, WorkerTopology};
use crate::dataset::block_file_name;
use crate::error::{Error, Result};
use crate::field::{Block, BlockDecomposition, Filter, ScalarGrid3D};
use crate::mfa::{load_model, MfaModel};
use crate::render::{
    render_block, Aabb, GridSource, PartialImage, RenderRequest, RgbImage, VolumeSource,
};
use crate::scalar::Real;
use crate::timing::{cpu_timed, wall_timed};

/// Where workers get their per-block data.
#[derive(Debug, Clone, Copy)]
pub enum BlockSource<'a, T> {
    /// `block_<id>.mfa` files, read by the worker that renders them.
    ModelDir(&'a Path),
    /// Models already in memory; fetch costs nothing.
    Models(&'a [MfaModel<T>]),
    /// Baseline: the raw grid, reconstructed with a filter. Each worker copies
    /// its block plus a halo wide enough for the kernel and its gradient.
    Grid {
        grid: &'a ScalarGrid3D<T>,
        filter: Filter,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct PipelineInput<'a, T> {
    pub source: BlockSource<'a, T>,
    pub decomposition: &'a BlockDecomposition,
    pub request: &'a RenderRequest,
    /// Power of two no larger than the block count.
    pub n_workers: usize,
}

/// Seconds per stage. Fetch and render are the maxima over workers of each
/// worker's own CPU time; composite and merge are wall time. `total` is
/// their sum, the latency a user waits for on dedicated per-worker cores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub fetch: f64,
    pub render: f64,
    pub composite: f64,
    pub merge: f64,
    pub total: f64,
}

impl StageTimings {
    pub fn from_stages(fetch: f64, render: f64, composite: f64, merge: f64) -> Self {
        Self {
            fetch,
            render,
            composite,
            merge,
            total: fetch + render + composite + merge,
        }
    }

    pub fn stage_sum(&self) -> f64 {
        self.fetch + self.render + self.composite + self.merge
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerTiming {
    pub fetch: Duration,
    pub render: Duration,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub image: RgbImage,
    pub timings: StageTimings,
    pub workers: Vec<WorkerTiming>,
    pub order: VisibilityOrder,
    /// Elapsed wall time of the whole run on this machine.
    pub wall: Duration,
}

enum Fetched<'a, T> {
    Owned(MfaModel<T>),
    Borrowed(&'a MfaModel<T>),
    Grid(ScalarGrid3D<T>, Filter),
}

fn fetch<'a, T: Real>(source: BlockSource<'a, T>, block: &Block) -> Result<Fetched<'a, T>> {
    match source {
        BlockSource::ModelDir(dir) => {
            load_model(&dir.join(block_file_name(block.id))).map(Fetched::Owned)
        }
        BlockSource::Models(models) => models
            .get(block.id)
            .map(Fetched::Borrowed)
            .ok_or_else(|| Error::Parameter(format!("no model for block {}", block.id))),
        BlockSource::Grid { grid, filter } => {
            let halo = filter.halo() + 1;
            let dims = grid.dims();
            let lo = [0, 1, 2].map(|a| block.index_lo[a].saturating_sub(halo));
            let hi = [0, 1, 2].map(|a| (block.index_hi[a] + halo).min(dims[a] - 1));
            grid.extract(lo, hi).map(|g| Fetched::Grid(g, filter))
        }
    }
}

fn render_fetched<T: Real>(
    data: &Fetched<'_, T>,
    block: &Block,
    request: &RenderRequest,
    rank: usize,
) -> Result<PartialImage> {
    let bounds = Aabb::new(block.bounds_min, block.bounds_max);
    let source: &dyn VolumeSource = match data {
        Fetched::Owned(m) => m,
        Fetched::Borrowed(m) => *m,
        Fetched::Grid(g, f) => &GridSource::new(g, *f),
    };
    render_block(source, &bounds, request, block.id, rank)
}

/// One worker: fetch and render each of its blocks, then composite them
/// locally in visibility order.
fn run_worker<T: Real>(
    input: &PipelineInput<'_, T>,
    topology: &WorkerTopology,
    order: &VisibilityOrder,
    worker: usize,
) -> Result<(PartialImage, WorkerTiming)> {
    let mut blocks: Vec<&Block> = topology
        .blocks_of(worker)
        .map(|id| &input.decomposition.blocks[id])
        .collect();
    blocks.sort_by_key(|b| order.rank_of(b.id));
    let (fetched, mut fetch_time) = cpu_timed(|| {
        blocks
            .iter()
            .map(|b| fetch(input.source, b))
            .collect::<Result<Vec<_>>>()
    });
    if matches!(input.source, BlockSource::Models(_)) {
        fetch_time = Duration::ZERO;
    }
    let fetched = fetched?;
    let (image, render_time) = cpu_timed(|| -> Result<PartialImage> {
        let mut acc: Option<PartialImage> = None;
        for (data, block) in fetched.iter().zip(&blocks) {
            let img = render_fetched(data, block, input.request, order.rank_of(block.id))?;
            acc = Some(match acc {
                None => img,
                Some(mut front) => {
                    let mut out = vec![[0.0; 4]; front.pixels.len()];
                    over_slices(&front.pixels, &img.pixels, &mut out);
                    front.pixels = out;
                    front
                }
            });
        }
        acc.ok_or_else(|| Error::Parameter(format!("worker {worker} has no blocks")))
    });
    Ok((
        image?,
        WorkerTiming {
            fetch: fetch_time,
            render: render_time,
        },
    ))
}

/// Fetch, render, binary swap and merge with `n_workers` threads.
pub fn run_pipeline<T: Real>(input: &PipelineInput<'_, T>) -> Result<PipelineOutput> {
    let start = std::time::Instant::now();
    input.request.validate()?;
    let decomp = input.decomposition;
    let topology = WorkerTopology::new(input.n_workers, decomp.block_count())?;
    let order = visibility_order(decomp, &input.request.camera);

    let results: Vec<Result<(PartialImage, WorkerTiming)>> = thread::scope(|s| {
        let handles: Vec<_> = (0..topology.n_workers())
            .map(|w| {
                let (topology, order) = (&topology, &order);
                s.spawn(move || run_worker(input, topology, order, w))
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(w, h)| {
                h.join().unwrap_or_else(|_| {
                    Err(Error::Pipeline {
                        worker: w,
                        round: 0,
                        reason: "worker thread panicked".into(),
                    })
                })
            })
            .collect()
    });
    let mut partials = Vec::with_capacity(results.len());
    let mut workers = Vec::with_capacity(results.len());
    for r in results {
        let (img, t) = r?;
        partials.push(img);
        workers.push(t);
    }

    let (swapped, composite_time) = wall_timed(|| binary_swap(partials, &order, &topology));
    let swapped = swapped?;
    let cam = &input.request.camera;
    let (image, merge_time) = wall_timed(|| {
        merge::merge(
            &swapped.owned,
            cam.width,
            cam.height,
            input.request.config.background,
        )
    });
    let image = image?;

    let max = |f: fn(&WorkerTiming) -> Duration| {
        workers
            .iter()
            .map(f)
            .max()
            .unwrap_or_default()
            .as_secs_f64()
    };
    let timings = StageTimings::from_stages(
        max(|t| t.fetch),
        max(|t| t.render),
        composite_time.as_secs_f64(),
        merge_time.as_secs_f64(),
    );
    Ok(PipelineOutput {
        image,
        timings,
        workers,
        order,
        wall: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compositor::swap::OwnedRange;
    use crate::field::{generate_marschner_lobb, partition, MarschnerLobb};
    use crate::mfa::{encode_fixed, EncodeConfig};
    use crate::render::{presets, Camera, RayCastConfig, TransferFunction};

    fn request(size: usize) -> RenderRequest {
        let (_, nodes) = presets().into_iter().find(|(n, _)| *n == "warm").unwrap();
        RenderRequest {
            camera: Camera::orbit([3.5; 3], 14.0, 35.0, 25.0, 40.0, (size, size)),
            tf: TransferFunction::new(nodes, 0.1).unwrap(),
            config: RayCastConfig {
                step: 0.1,
                ..RayCastConfig::default()
            },
            value_range: [0.0, 1.0],
        }
    }

    #[test]
    fn one_worker_equals_direct_render_and_merge() {
        let grid =
            generate_marschner_lobb::<f64>([9, 9, 9], [0.0; 3], [7.0; 3], MarschnerLobb::default())
                .unwrap();
        let decomp = partition(&grid, 0).unwrap();
        let model = encode_fixed(&grid, &EncodeConfig::fixed(2, [6, 6, 6])).unwrap();
        let req = request(24);
        let models = [model.clone()];
        let out = run_pipeline(&PipelineInput {
            source: BlockSource::Models(&models),
            decomposition: &decomp,
            request: &req,
            n_workers: 1,
        })
        .unwrap();
        let b = &decomp.blocks[0];
        let direct =
            render_block(&model, &Aabb::new(b.bounds_min, b.bounds_max), &req, 0, 0).unwrap();
        let merged = merge::merge(
            &[OwnedRange {
                worker: 0,
                start: 0,
                pixels: direct.pixels,
            }],
            24,
            24,
            req.config.background,
        )
        .unwrap();
        assert_eq!(out.image, merged);
        assert_eq!(out.timings.fetch, 0.0);
        assert!((out.timings.total - out.timings.stage_sum()).abs() < 1e-12);
    }

    #[test]
    fn worker_counts_agree_on_grid_source() {
        let grid = generate_marschner_lobb::<f64>(
            [17, 17, 17],
            [0.0; 3],
            [7.0; 3],
            MarschnerLobb::default(),
        )
        .unwrap();
        let decomp = partition(&grid, 3).unwrap();
        let req = request(32);
        let images: Vec<RgbImage> = [1, 2, 8]
            .into_iter()
            .map(|n| {
                run_pipeline(&PipelineInput {
                    source: BlockSource::Grid {
                        grid: &grid,
                        filter: Filter::Trilinear,
                    },
                    decomposition: &decomp,
                    request: &req,
                    n_workers: n,
                })
                .unwrap()
                .image
            })
            .collect();
        for img in &images[1..] {
            let worst = img
                .data
                .iter()
                .zip(&images[0].data)
                .map(|(a, b)| a.abs_diff(*b))
                .max()
                .unwrap();
            assert!(worst <= 1, "worst channel difference {worst}");
        }
    }

    #[test]
    fn missing_model_dir_is_io_error() {
        let grid = ScalarGrid3D::from_fn([5, 5, 5], [0.0; 3], [1.0; 3], |p| p[0]).unwrap();
        let decomp = partition(&grid, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let req = request(4);
        let err = run_pipeline::<f64>(&PipelineInput {
            source: BlockSource::ModelDir(dir.path()),
            decomposition: &decomp,
            request: &req,
            n_workers: 2,
        })
        .unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }
}
