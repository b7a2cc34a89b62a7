use std::sync::{Arc, Mutex};

use mfa_dvv_core::compositor::{run_pipeline, BlockSource, PipelineInput, StageTimings};
use mfa_dvv_core::dataset::Dataset;
use mfa_dvv_core::field::BlockDecomposition;
use mfa_dvv_core::mfa::MfaModel;
use mfa_dvv_core::render::{RenderRequest, RgbImage};
use mfa_dvv_core::timing::cpu_timed;
use mfa_dvv_core::Result;

use crate::coalesce::Coalescer;
use crate::registry::DatasetEntry;

pub struct Rendered {
    pub image: RgbImage,
    pub timings: StageTimings,
}

struct Loaded {
    decomposition: BlockDecomposition,
    models: Arc<Vec<MfaModel<f64>>>,
}

/// Per-dataset render state. Models are read once, on the first render, and
/// stay resident; only that render reports a nonzero fetch time.
pub struct Session {
    pub entry: DatasetEntry,
    n_workers: Option<usize>,
    loaded: Mutex<Option<Loaded>>,
}

impl Session {
    pub fn new(entry: DatasetEntry, n_workers: Option<usize>) -> Self {
        Self {
            entry,
            n_workers,
            loaded: Mutex::new(None),
        }
    }

    pub fn is_loaded(&self) -> bool {
        self.loaded.lock().unwrap().is_some()
    }

    pub fn render(&self, request: &RenderRequest) -> Result<Rendered> {
        let (models, decomposition, fetch) = {
            let mut guard = self.loaded.lock().unwrap();
            let mut fetch = 0.0;
            if guard.is_none() {
                let (ds, t) = cpu_timed(|| Dataset::<f64>::load(&self.entry.dir));
                let ds = ds?;
                fetch = t.as_secs_f64();
                *guard = Some(Loaded {
                    decomposition: ds.decomposition,
                    models: Arc::new(ds.models),
                });
            }
            let l = guard.as_ref().unwrap();
            (Arc::clone(&l.models), l.decomposition.clone(), fetch)
        };
        let out = run_pipeline(&PipelineInput {
            source: BlockSource::Models(&models),
            decomposition: &decomposition,
            request,
            n_workers: self.n_workers.unwrap_or(models.len()),
        })?;
        let t = out.timings;
        Ok(Rendered {
            image: out.image,
            timings: StageTimings::from_stages(fetch, t.render, t.composite, t.merge),
        })
    }
}

pub type RenderQueue = Coalescer<RenderRequest, Result<Rendered>>;

/// One queue per dataset; requests for a dataset are serialized through it.
pub fn render_queue(session: Arc<Session>) -> RenderQueue {
    Coalescer::new(move |req: RenderRequest| session.render(&req))
}
