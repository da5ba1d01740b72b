//! Line-delimited JSON manifest tying pairs to their feature files.
//!
//! Feature paths are resolved relative to the manifest's directory.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{atomic_write, read_feature_file};
use crate::error::{Error, Result};
use crate::sampling::{Modality, Pair, PairIndex, Video};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub pair_id: String,
    pub scenario: String,
    pub third_features: String,
    pub ego_features: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ManifestRecord = serde_json::from_str(line)
            .map_err(|e| Error::Ingest(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if !seen.insert(rec.pair_id.clone()) {
            return Err(Error::Ingest(format!("duplicate pair id {}", rec.pair_id)));
        }
        records.push(rec);
    }
    Ok(records)
}

pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Reads the manifest and every referenced feature file into a [`PairIndex`].
/// With `n_classes` given, label ids must lie in `[0, n_classes)`.
pub fn load_dataset(manifest: &Path, n_classes: Option<usize>) -> Result<PairIndex> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut pairs = Vec::new();
    for rec in read_manifest(manifest)? {
        let labels = rec.labels.unwrap_or_default();
        if let (Some(c), Some(&bad)) = (n_classes, labels.iter().find(|&&l| Some(l) >= n_classes)) {
            return Err(Error::Ingest(format!("pair {}: label {bad} outside [0, {c})", rec.pair_id)));
        }
        let load = |rel: &str, modality: Modality| -> Result<Video> {
            let path = base.join(rel);
            if !path.is_file() {
                return Err(Error::Ingest(format!("pair {}: missing feature file {}", rec.pair_id, path.display())));
            }
            let (ts, dim, feats) = read_feature_file(&path)?;
            Video::new(format!("{}/{}", rec.pair_id, modality), modality, dim, ts, feats)
        };
        pairs.push(Pair {
            third: load(&rec.third_features, Modality::ThirdPerson)?,
            ego: load(&rec.ego_features, Modality::FirstPerson)?,
            id: rec.pair_id,
            scenario: rec.scenario,
            labels,
        });
    }
    PairIndex::new(pairs)
}
