//! On-disk formats: frame features, manifests, checkpoints, key-value
//! configs and result records.
//!
//! Every writer goes through [`atomic_write`], so readers never observe a
//! partially written file.

mod checkpoint;
mod config;
mod features;
mod manifest;
mod results;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::KeyValueConfig;
pub use features::{decode_feature_file, encode_feature_file, read_feature_file, write_feature_file, FEATURE_MAGIC, FEATURE_VERSION};
pub use manifest::{load_dataset, read_manifest, write_manifest, ManifestRecord};
pub use results::{write_csv, write_jsonl, RunRecord};

/// Writes `bytes` to a sibling temp file, syncs it, then renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
