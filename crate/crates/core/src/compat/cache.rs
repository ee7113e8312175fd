use std::fs;
use std::path::PathBuf;

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DiscretizationConfig, NoFitTable};
use crate::geometry::Polygon;

const CACHE_VERSION: u32 = 1;

/// On-disk store of no-fit tables, one JSON file per (shape pair, config).
///
/// The key hashes both centered shapes, the discretization and the overlap
/// tolerance, so any change to them misses the cache.
#[derive(Debug, Clone)]
pub struct NffCache {
    dir: PathBuf,
}

#[derive(Serialize)]
struct KeyMaterial<'a> {
    version: u32,
    fixed: &'a Polygon,
    moving: &'a Polygon,
    cfg: &'a DiscretizationConfig,
    eps: f64,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    key: String,
    table: NoFitTable,
}

impl NffCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Cache rooted at `$OPUS_CACHE_DIR`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os("OPUS_CACHE_DIR").map(Self::new)
    }

    pub fn key(fixed: &Polygon, moving: &Polygon, cfg: &DiscretizationConfig, eps: f64) -> String {
        let material = serde_json::to_vec(&KeyMaterial {
            version: CACHE_VERSION,
            fixed,
            moving,
            cfg,
            eps,
        })
        .expect("key material serializes");
        Sha256::digest(&material)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("nff-{key}.json"))
    }

    pub fn load(&self, fixed: &Polygon, moving: &Polygon, cfg: &DiscretizationConfig, eps: f64) -> Option<NoFitTable> {
        let key = Self::key(fixed, moving, cfg, eps);
        let bytes = fs::read(self.path(&key)).ok()?;
        match serde_json::from_slice::<CacheFile>(&bytes) {
            Ok(f) if f.version == CACHE_VERSION && f.key == key => Some(f.table),
            Ok(_) => None,
            Err(e) => {
                warn!("ignoring unreadable cache entry {key}: {e}");
                None
            }
        }
    }

    /// Best effort; failures are logged and otherwise ignored.
    pub fn store(&self, fixed: &Polygon, moving: &Polygon, cfg: &DiscretizationConfig, eps: f64, table: &NoFitTable) {
        let key = Self::key(fixed, moving, cfg, eps);
        let file = CacheFile {
            version: CACHE_VERSION,
            key: key.clone(),
            table: table.clone(),
        };
        let res = fs::create_dir_all(&self.dir)
            .and_then(|_| fs::write(self.path(&key), serde_json::to_vec(&file).expect("table serializes")));
        if let Err(e) = res {
            warn!("could not write cache entry {key}: {e}");
        }
    }
}
