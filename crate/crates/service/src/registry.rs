use std::fs;
use std::path::{Path, PathBuf};

use mfa_dvv_core::dataset::{DatasetManifest, MANIFEST_FILE};
use serde::Serialize;

/// An encoded dataset directory found at startup. Models are not read here.
#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub id: String,
    pub dir: PathBuf,
    pub manifest: DatasetManifest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetDescriptor {
    pub id: String,
    pub dims: [usize; 3],
    pub domain_min: [f64; 3],
    pub domain_max: [f64; 3],
    pub value_range: [f64; 2],
    pub levels: u32,
    pub block_count: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: Vec<DatasetEntry>,
}

impl Registry {
    pub fn new(entries: Vec<DatasetEntry>) -> Self {
        Self { entries }
    }

    /// Each path is either a dataset directory or a directory of them.
    /// Unreadable or malformed datasets are skipped with a warning, as are
    /// ids already taken.
    pub fn scan(paths: &[PathBuf]) -> Self {
        let mut reg = Self::default();
        for path in paths {
            if path.join(MANIFEST_FILE).is_file() {
                reg.try_add(path);
                continue;
            }
            let Ok(children) = fs::read_dir(path) else {
                log::warn!("skipping {}: not a readable directory", path.display());
                continue;
            };
            let mut dirs: Vec<PathBuf> = children
                .flatten()
                .map(|e| e.path())
                .filter(|p| p.is_dir())
                .collect();
            dirs.sort();
            for dir in dirs {
                if dir.join(MANIFEST_FILE).is_file() {
                    reg.try_add(&dir);
                }
            }
        }
        reg
    }

    fn try_add(&mut self, dir: &Path) {
        match DatasetManifest::read(dir) {
            Ok(manifest) => {
                let id = manifest.name.clone();
                if self.get(&id).is_some() {
                    log::warn!(
                        "skipping {}: dataset id {id:?} already registered",
                        dir.display()
                    );
                    return;
                }
                self.entries.push(DatasetEntry {
                    id,
                    dir: dir.to_path_buf(),
                    manifest,
                });
            }
            Err(e) => log::warn!("skipping {}: {e}", dir.display()),
        }
    }

    pub fn get(&self, id: &str) -> Option<&DatasetEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn descriptors(&self) -> Vec<DatasetDescriptor> {
        self.entries
            .iter()
            .map(|e| DatasetDescriptor {
                id: e.id.clone(),
                dims: e.manifest.grid_dims,
                domain_min: e.manifest.domain_min,
                domain_max: e.manifest.domain_max,
                value_range: e.manifest.value_range,
                levels: e.manifest.levels,
                block_count: e.manifest.blocks.len(),
            })
            .collect()
    }
}
