//! Persistent cache of `j_n` coefficient blocks.
//!
//! One JSON file per index `n`:
//!
//! ```text
//! {"format": 1, "n": 5, "prec": 33, "coeffs": ["4837...", "..."]}
//! ```
//!
//! `coeffs[k]` is the decimal string of `c_n(k+1)`, so a file of precision
//! `P` holds the coefficients of `q^1 .. q^{P-1}`. Writes go through a
//! temporary file followed by an atomic rename; concurrent readers are
//! safe, and a corrupted or version-mismatched file is treated as a miss
//! and rewritten.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::qexp;
use crate::{Error, Result};

const CACHE_FORMAT: u32 = 1;
/// Blocks are computed with at least this precision so small requests
/// do not thrash the store.
const MIN_BLOCK_PRECISION: u64 = 33;

#[derive(Serialize, Deserialize)]
struct BlockFile {
    format: u32,
    n: u32,
    prec: u64,
    coeffs: Vec<String>,
}

#[derive(Clone)]
struct Block {
    prec: u64,
    coeffs: Arc<Vec<BigInt>>,
}

/// In-memory map of coefficient blocks, optionally mirrored to disk.
pub struct CoeffCache {
    dir: Option<PathBuf>,
    mem: RwLock<BTreeMap<u32, Block>>,
}

impl CoeffCache {
    /// A cache without a backing directory.
    pub fn in_memory() -> Self {
        Self { dir: None, mem: RwLock::new(BTreeMap::new()) }
    }

    /// A cache backed by `dir` (created if missing).
    pub fn on_disk(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)
            .map_err(|e| Error::Cache(format!("cannot create cache dir {}: {e}", dir.display())))?;
        Ok(Self { dir: Some(dir), mem: RwLock::new(BTreeMap::new()) })
    }

    pub fn directory(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// `c_n(m)` for `m >= 1`, computing and storing a block on a miss.
    pub fn coefficient(&self, n: u32, m: u64) -> BigInt {
        let block = self.block(n, m + 1);
        block[(m - 1) as usize].clone()
    }

    /// The coefficients `c_n(1) .. c_n(prec - 1)` as a shared vector of at
    /// least the requested length.
    pub fn block(&self, n: u32, prec: u64) -> Arc<Vec<BigInt>> {
        let prec = prec.max(MIN_BLOCK_PRECISION);
        {
            let mem = self.mem.read().unwrap();
            if let Some(b) = mem.get(&n) {
                if b.prec >= prec {
                    return b.coeffs.clone();
                }
            }
        }
        if let Some(b) = self.load_from_disk(n) {
            if b.prec >= prec {
                let coeffs = b.coeffs.clone();
                self.mem.write().unwrap().insert(n, b);
                return coeffs;
            }
        }
        let series = qexp::jn(n, prec as i64);
        let coeffs: Vec<BigInt> = (1..prec as i64).map(|m| series.coeff(m)).collect();
        let block = Block { prec, coeffs: Arc::new(coeffs) };
        if let Err(e) = self.store_to_disk(n, &block) {
            eprintln!("warning: {e}");
        }
        let coeffs = block.coeffs.clone();
        self.mem.write().unwrap().insert(n, block);
        coeffs
    }

    fn file_path(&self, n: u32) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("jn-{n:05}.json")))
    }

    fn load_from_disk(&self, n: u32) -> Option<Block> {
        let path = self.file_path(n)?;
        let data = std::fs::read(&path).ok()?;
        let parsed: BlockFile = match serde_json::from_slice(&data) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("warning: corrupted cache file {}: {e}; recomputing", path.display());
                return None;
            }
        };
        if parsed.format != CACHE_FORMAT || parsed.n != n {
            return None;
        }
        if parsed.coeffs.len() as u64 + 1 != parsed.prec {
            eprintln!("warning: inconsistent cache file {}; recomputing", path.display());
            return None;
        }
        let mut coeffs = Vec::with_capacity(parsed.coeffs.len());
        for s in &parsed.coeffs {
            match s.parse::<BigInt>() {
                Ok(v) => coeffs.push(v),
                Err(e) => {
                    eprintln!(
                        "warning: corrupted cache entry in {}: {e}; recomputing",
                        path.display()
                    );
                    return None;
                }
            }
        }
        Some(Block { prec: parsed.prec, coeffs: Arc::new(coeffs) })
    }

    fn store_to_disk(&self, n: u32, block: &Block) -> Result<()> {
        let Some(path) = self.file_path(n) else { return Ok(()) };
        let file = BlockFile {
            format: CACHE_FORMAT,
            n,
            prec: block.prec,
            coeffs: block.coeffs.iter().map(|c| c.to_string()).collect(),
        };
        let json = serde_json::to_vec(&file)
            .map_err(|e| Error::Cache(format!("cannot serialize cache block: {e}")))?;
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        std::fs::write(&tmp, &json)
            .map_err(|e| Error::Cache(format!("cannot write {}: {e}", tmp.display())))?;
        std::fs::rename(&tmp, &path)
            .map_err(|e| Error::Cache(format!("cannot rename into {}: {e}", path.display())))?;
        Ok(())
    }

    /// Number of cached blocks and total bytes on disk.
    pub fn stats(&self) -> Result<CacheStats> {
        let mut stats = CacheStats {
            memory_blocks: self.mem.read().unwrap().len() as u64,
            ..CacheStats::default()
        };
        if let Some(dir) = &self.dir {
            for entry in std::fs::read_dir(dir)
                .map_err(|e| Error::Cache(format!("cannot read {}: {e}", dir.display())))?
            {
                let entry = entry.map_err(|e| Error::Cache(e.to_string()))?;
                let name = entry.file_name();
                let name = name.to_string_lossy();
                if name.starts_with("jn-") && name.ends_with(".json") {
                    stats.disk_files += 1;
                    stats.disk_bytes += entry
                        .metadata()
                        .map_err(|e| Error::Cache(e.to_string()))?
                        .len();
                }
            }
        }
        Ok(stats)
    }

    /// Removes every cached block, on disk and in memory.
    pub fn clear(&self) -> Result<u64> {
        let mut removed = 0;
        self.mem.write().unwrap().clear();
        if let Some(dir) = &self.dir {
            for entry in std::fs::read_dir(dir)
                .map_err(|e| Error::Cache(format!("cannot read {}: {e}", dir.display())))?
            {
                let entry = entry.map_err(|e| Error::Cache(e.to_string()))?;
                let name = entry.file_name();
                let name = name.to_string_lossy().to_string();
                if name.starts_with("jn-") && name.ends_with(".json") {
                    std::fs::remove_file(entry.path())
                        .map_err(|e| Error::Cache(format!("cannot remove {name}: {e}")))?;
                    removed += 1;
                }
            }
        }
        Ok(removed)
    }
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct CacheStats {
    pub memory_blocks: u64,
    pub disk_files: u64,
    pub disk_bytes: u64,
}
