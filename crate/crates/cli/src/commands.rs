use std::fs;
use std::io::Write as _;
use std::path::Path;

use mfa_dvv_core::compositor::{
    bench_sweep, run_pipeline, write_bench_csv, BlockSource, PipelineInput, PipelineOutput,
    BENCH_HEADER,
};
use mfa_dvv_core::dataset::encode_dataset;
use mfa_dvv_core::field::{
    generate_marschner_lobb, load_raw_with_sidecar, partition, save_raw, BlockDecomposition,
    MarschnerLobb, RawDtype, ScalarGrid3D,
};
use mfa_dvv_core::metrics::image_metrics;
use mfa_dvv_core::mfa::{CtrlSpec, EncodeConfig};
use mfa_dvv_core::render::doc::{parse_camera, parse_render_config, parse_transfer_function};
use mfa_dvv_core::render::{
    presets, Camera, RayCastConfig, RenderRequest, RgbImage, Shading, TransferFunction,
};

use crate::args::{
    BenchArgs, Cli, Command, CompareArgs, DtypeArg, EncodeArgs, FilterArg, GenMlArgs, RenderArgs,
    ServeArgs, SourceArgs, ViewArgs,
};
use crate::Failure;

type Result<T> = std::result::Result<T, Failure>;

const DEFAULT_IMAGE_SIDE: usize = 768;

pub(crate) fn run(cli: Cli) -> Result<()> {
    let quiet = cli.quiet;
    match cli.command {
        Command::GenMl(a) => gen_ml(a, quiet),
        Command::Encode(a) => encode(a, quiet),
        Command::Render(a) => render(a, quiet),
        Command::Bench(a) => bench(a, quiet),
        Command::Compare(a) => compare(a),
        Command::Serve(a) => serve(a, quiet),
    }
}

fn gen_ml(a: GenMlArgs, quiet: bool) -> Result<()> {
    let dims = a.dims.0;
    if dims.iter().any(|&d| d < 2) {
        return Err(Failure::usage(format!(
            "--dims needs at least 2 samples per axis, got {dims:?}"
        )));
    }
    let signal = MarschnerLobb::new(a.f_m, a.alpha)?;
    let (lo, hi) = a.domain;
    let mut grid: ScalarGrid3D<f64> = generate_marschner_lobb(dims, [lo; 3], [hi; 3], signal)?;
    let dtype = match a.dtype {
        DtypeArg::F32 => RawDtype::F32,
        DtypeArg::F64 => RawDtype::F64,
        DtypeArg::U8 => RawDtype::U8,
    };
    if dtype == RawDtype::U8 {
        // The signal lies in [0,1]; bytes carry it as 0..=255.
        let values = grid.values().iter().map(|v| v * 255.0).collect();
        grid = ScalarGrid3D::new(dims, [lo; 3], [hi; 3], values)?;
    }
    save_raw(&grid, &a.out, dtype)?;
    if !quiet {
        println!(
            "wrote {} dims={}x{}x{} dtype={dtype} value_range={},{}",
            a.out.display(),
            dims[0],
            dims[1],
            dims[2],
            grid.value_min(),
            grid.value_max()
        );
    }
    Ok(())
}

fn encode(a: EncodeArgs, quiet: bool) -> Result<()> {
    let (grid, _) = load_raw_with_sidecar::<f64>(&a.input)?;
    let ctrl = match a.e_max {
        Some(e_max) => CtrlSpec::Adaptive { e_max, cap: None },
        None => a.ctrl.0,
    };
    let cfg = EncodeConfig {
        degree: a.degree,
        ctrl,
        knots: a.knots.into(),
    };
    let name = a.name.unwrap_or_else(|| {
        a.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "volume".into())
    });
    let threads = a
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let ds = encode_dataset(&grid, &name, a.levels, &cfg, threads)?;
    ds.write(&a.out)?;
    if !quiet {
        for b in &ds.manifest.blocks {
            println!(
                "block {} ctrl={}x{}x{} e_max={:.3e} cr={:.3}{}",
                b.id,
                b.n_ctrl[0],
                b.n_ctrl[1],
                b.n_ctrl[2],
                b.e_max_achieved,
                b.compression_ratio,
                if b.capped { " capped" } else { "" }
            );
        }
        println!(
            "wrote {} blocks to {} cr={:.3}",
            ds.manifest.blocks.len(),
            a.out.display(),
            ds.compression_ratio()
        );
    }
    Ok(())
}

/// Blocks plus the grid geometry needed for default views.
struct Scene {
    decomposition: BlockDecomposition,
    data: SceneData,
    domain_min: [f64; 3],
    domain_max: [f64; 3],
    dims: [usize; 3],
    value_range: [f64; 2],
}

enum SceneData {
    Models(std::path::PathBuf),
    Grid(ScalarGrid3D<f64>, mfa_dvv_core::field::Filter),
}

impl Scene {
    fn load(src: &SourceArgs) -> Result<Self> {
        if let Some(dir) = &src.models {
            if src.filter.is_some() || src.levels.is_some() {
                return Err(Failure::usage(
                    "--filter and --levels apply to --raw; an encoded dataset fixes its own blocks",
                ));
            }
            let manifest = mfa_dvv_core::dataset::DatasetManifest::read(dir)?;
            return Ok(Scene {
                decomposition: manifest.decomposition()?,
                data: SceneData::Models(dir.clone()),
                domain_min: manifest.domain_min,
                domain_max: manifest.domain_max,
                dims: manifest.grid_dims,
                value_range: manifest.value_range,
            });
        }
        let raw = src
            .raw
            .as_ref()
            .ok_or_else(|| Failure::usage("need --models or --raw"))?;
        let (grid, meta) = load_raw_with_sidecar::<f64>(raw)?;
        Ok(Scene {
            decomposition: partition(&grid, src.levels.unwrap_or(0))?,
            domain_min: meta.domain_min,
            domain_max: meta.domain_max,
            dims: meta.dims,
            value_range: [grid.value_min(), grid.value_max()],
            data: SceneData::Grid(grid, src.filter.unwrap_or(FilterArg::Trilinear).into()),
        })
    }

    fn source(&self) -> BlockSource<'_, f64> {
        match &self.data {
            SceneData::Models(dir) => BlockSource::ModelDir(dir),
            SceneData::Grid(grid, filter) => BlockSource::Grid {
                grid,
                filter: *filter,
            },
        }
    }

    fn finest_spacing(&self) -> f64 {
        (0..3)
            .map(|a| (self.domain_max[a] - self.domain_min[a]) / (self.dims[a] - 1) as f64)
            .fold(f64::INFINITY, f64::min)
    }

    fn request(&self, v: &ViewArgs) -> Result<RenderRequest> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|e| Failure::io(&format!("reading {}", p.display()), e))
        };
        let mut config = match &v.config {
            Some(p) => parse_render_config(&read(p)?)?,
            None => RayCastConfig {
                step: 0.5 * self.finest_spacing(),
                ..RayCastConfig::default()
            },
        };
        if let Some(step) = v.step {
            config.step = step;
        }
        if v.shading {
            config.shading = Shading::default_blinn_phong();
        }
        let mut camera = match &v.camera {
            Some(p) => parse_camera(&read(p)?)?,
            None => {
                let center: [f64; 3] =
                    [0, 1, 2].map(|a| 0.5 * (self.domain_min[a] + self.domain_max[a]));
                let extent = (0..3)
                    .map(|a| self.domain_max[a] - self.domain_min[a])
                    .fold(0.0, f64::max);
                // One given side makes the default view square.
                let side = v.width.or(v.height).unwrap_or(DEFAULT_IMAGE_SIDE);
                Camera::orbit(
                    center,
                    2.3 * extent,
                    v.azimuth,
                    v.elevation,
                    35.0,
                    (side, side),
                )
            }
        };
        if let Some(w) = v.width {
            camera.width = w;
        }
        if let Some(h) = v.height {
            camera.height = h;
        }
        let tf = match &v.tf {
            Some(p) => parse_transfer_function(&read(p)?)?,
            None => {
                let (_, nodes) = presets()
                    .into_iter()
                    .find(|(n, _)| *n == v.preset)
                    .ok_or_else(|| Failure::usage(format!("unknown preset '{}'", v.preset)))?;
                TransferFunction::new(nodes, config.step)?
            }
        };
        let request = RenderRequest {
            camera,
            tf,
            config,
            value_range: self.value_range,
        };
        request.validate()?;
        Ok(request)
    }

    fn run(&self, request: &RenderRequest, n_workers: usize) -> Result<PipelineOutput> {
        Ok(run_pipeline(&PipelineInput {
            source: self.source(),
            decomposition: &self.decomposition,
            request,
            n_workers,
        })?)
    }
}

fn render(a: RenderArgs, quiet: bool) -> Result<()> {
    let scene = Scene::load(&a.source)?;
    let request = scene.request(&a.view)?;
    let workers = a.workers.unwrap_or(scene.decomposition.block_count());
    let out = scene.run(&request, workers)?;
    out.image.write_png(&a.out)?;
    let t = out.timings;
    if let Some(path) = &a.timings {
        let fresh = !path.exists();
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Failure::io(&format!("opening {}", path.display()), e))?;
        let row = write_bench_csv(&[mfa_dvv_core::compositor::BenchRow {
            n_workers: workers,
            timings: t,
        }]);
        let text = if fresh {
            row
        } else {
            row.lines().skip(1).map(|l| format!("{l}\n")).collect()
        };
        f.write_all(text.as_bytes())
            .map_err(|e| Failure::io(&format!("writing {}", path.display()), e))?;
    }
    if !quiet {
        println!(
            "wrote {} {}x{} workers={workers} fetch={:.6} render={:.6} composite={:.6} merge={:.6} total={:.6}",
            a.out.display(),
            out.image.width,
            out.image.height,
            t.fetch,
            t.render,
            t.composite,
            t.merge,
            t.total
        );
    }
    Ok(())
}

fn bench(a: BenchArgs, quiet: bool) -> Result<()> {
    let scene = Scene::load(&a.source)?;
    let request = scene.request(&a.view)?;
    let blocks = scene.decomposition.block_count();
    let max = a.max_workers.unwrap_or(blocks);
    if !max.is_power_of_two() || max > blocks {
        return Err(Failure::usage(format!(
            "--max-workers must be a power of two no larger than the block count {blocks}, got {max}"
        )));
    }
    let counts: Vec<usize> = (0..=max.trailing_zeros()).map(|k| 1 << k).collect();
    let rows = bench_sweep(&counts, a.repeats, |n| {
        run_pipeline(&PipelineInput {
            source: scene.source(),
            decomposition: &scene.decomposition,
            request: &request,
            n_workers: n,
        })
        .map(|o| o.timings)
    })?;
    let csv = write_bench_csv(&rows);
    fs::write(&a.out, &csv).map_err(|e| Failure::io(&format!("writing {}", a.out.display()), e))?;
    if !quiet {
        println!("{BENCH_HEADER}");
        print!(
            "{}",
            csv.lines()
                .skip(1)
                .map(|l| format!("{l}\n"))
                .collect::<String>()
        );
    }
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let test = RgbImage::read_png(&a.test)?;
    let reference = RgbImage::read_png(&a.reference)?;
    let report = image_metrics(&test, &reference)?;
    let json = serde_json::to_string(&report).expect("report serializes");
    if let Some(path) = &a.out {
        fs::write(path, format!("{json}\n"))
            .map_err(|e| Failure::io(&format!("writing {}", path.display()), e))?;
    }
    if a.json {
        println!("{json}");
    } else {
        println!("{report}");
    }
    Ok(())
}

fn serve(a: ServeArgs, quiet: bool) -> Result<()> {
    let level = if quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    let registry = mfa_dvv_service::registry::Registry::scan(&a.data);
    if registry.is_empty() {
        log::warn!("no datasets found; serving an empty registry");
    }
    let state = mfa_dvv_service::AppState::new(
        registry,
        mfa_dvv_service::ServiceConfig {
            n_workers: a.workers,
        },
    );
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::io("starting runtime", e))?;
    let addr = std::net::SocketAddr::new(a.host, a.port);
    runtime
        .block_on(mfa_dvv_service::serve(addr, state))
        .map_err(|e| Failure::io(&format!("serving on {addr}"), e))
}
