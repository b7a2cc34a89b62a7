//! A directory of per-block model files plus a JSON manifest describing the
//! decomposition they came from.

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{partition, partition_dims, BlockDecomposition, ScalarGrid3D};
use crate::mfa::{
    compression_ratio, encode, load_model, save_model, CtrlSpec, EncodeConfig, MfaModel,
};
use crate::scalar::Real;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn block_file_name(id: usize) -> String {
    format!("block_{id}.mfa")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub id: usize,
    pub file: String,
    pub n_ctrl: [usize; 3],
    pub source_dims: [usize; 3],
    pub e_max_achieved: f64,
    pub compression_ratio: f64,
    /// Adaptive encoding stopped at the control-point cap above tolerance.
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub grid_dims: [usize; 3],
    pub domain_min: [f64; 3],
    pub domain_max: [f64; 3],
    /// Range of the full input grid; shared by every block for classification.
    pub value_range: [f64; 2],
    pub levels: u32,
    pub degree: usize,
    pub ctrl: String,
    pub blocks: Vec<BlockRecord>,
}

impl DatasetManifest {
    pub fn decomposition(&self) -> Result<BlockDecomposition> {
        partition_dims(
            self.grid_dims,
            self.domain_min,
            self.domain_max,
            self.levels,
        )
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let m: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if m.blocks.len() != 1usize << m.levels
            || m.blocks.iter().enumerate().any(|(i, b)| b.id != i)
        {
            return Err(Error::Format(format!(
                "{}: expected blocks 0..{} in order",
                path.display(),
                1usize << m.levels
            )));
        }
        Ok(m)
    }
}

pub fn describe_ctrl(spec: &CtrlSpec) -> String {
    match spec {
        CtrlSpec::Match => "match".into(),
        CtrlSpec::Fixed(c) => format!("{},{},{}", c[0], c[1], c[2]),
        CtrlSpec::Adaptive { e_max, .. } => format!("adaptive:{e_max}"),
    }
}

/// Models held in memory together with their manifest.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    pub manifest: DatasetManifest,
    pub decomposition: BlockDecomposition,
    pub models: Vec<MfaModel<T>>,
}

/// Partitions `grid` and encodes every block, `threads` blocks at a time.
pub fn encode_dataset<T: Real>(
    grid: &ScalarGrid3D<T>,
    name: &str,
    levels: u32,
    cfg: &EncodeConfig,
    threads: usize,
) -> Result<Dataset<T>> {
    let decomposition = partition(grid, levels)?;
    let count = decomposition.block_count();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<(MfaModel<T>, bool)>>>> =
        Mutex::new((0..count).map(|_| None).collect());
    thread::scope(|s| {
        for _ in 0..threads.clamp(1, count) {
            s.spawn(|| loop {
                let id = next.fetch_add(1, Ordering::Relaxed);
                if id >= count {
                    break;
                }
                let block = &decomposition.blocks[id];
                let result = grid
                    .extract(block.index_lo, block.index_hi)
                    .and_then(|sub| encode(&sub, cfg))
                    .map(|o| (o.model, o.capped))
                    .map_err(|e| match e {
                        Error::Parameter(m) => Error::Parameter(format!("block {id}: {m}")),
                        Error::Numeric(m) => Error::Numeric(format!("block {id}: {m}")),
                        other => other,
                    });
                slots.lock().expect("no panics while holding the lock")[id] = Some(result);
            });
        }
    });
    let mut models = Vec::with_capacity(count);
    let mut blocks = Vec::with_capacity(count);
    for (id, slot) in slots
        .into_inner()
        .expect("threads joined")
        .into_iter()
        .enumerate()
    {
        let (model, capped) = slot.expect("every block visited")?;
        blocks.push(BlockRecord {
            id,
            file: block_file_name(id),
            n_ctrl: model.n_ctrl(),
            source_dims: model.source_dims(),
            e_max_achieved: model.e_max_achieved().to_f64_lossy(),
            compression_ratio: compression_ratio(&model),
            capped,
        });
        models.push(model);
    }
    let manifest = DatasetManifest {
        name: name.to_string(),
        grid_dims: grid.dims(),
        domain_min: crate::scalar::vec3_f64(grid.domain_min()),
        domain_max: crate::scalar::vec3_f64(grid.domain_max()),
        value_range: [
            grid.value_min().to_f64_lossy(),
            grid.value_max().to_f64_lossy(),
        ],
        levels,
        degree: cfg.degree,
        ctrl: describe_ctrl(&cfg.ctrl),
        blocks,
    };
    Ok(Dataset {
        manifest,
        decomposition,
        models,
    })
}

impl<T: Real> Dataset<T> {
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        for (record, model) in self.manifest.blocks.iter().zip(&self.models) {
            save_model(model, &dir.join(&record.file))?;
        }
        self.manifest.write(dir)
    }

    /// Reads the manifest and every block model.
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = DatasetManifest::read(dir)?;
        let decomposition = manifest.decomposition()?;
        let models = manifest
            .blocks
            .iter()
            .map(|b| load_model(&dir.join(&b.file)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            manifest,
            decomposition,
            models,
        })
    }

    /// Combined compression ratio: input samples over stored control points.
    pub fn compression_ratio(&self) -> f64 {
        let samples: usize = self.manifest.grid_dims.iter().product();
        let ctrl: usize = self.models.iter().map(|m| m.ctrl().len()).sum();
        samples as f64 / ctrl as f64
    }
}
