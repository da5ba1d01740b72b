//! `AOFV` frame-feature files.
//!
//! Layout (little-endian): magic `AOFV`, `u32` version, `u32` dim,
//! `u32` count, `count` f64 timestamps (strictly ascending seconds), then
//! `count × dim` f64 features in row-major order.

use std::path::Path;

use super::atomic_write;
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: [u8; 4] = *b"AOFV";
pub const FEATURE_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

fn check_timestamps(timestamps: &[f64]) -> Result<()> {
    if timestamps.iter().any(|t| !t.is_finite()) {
        return Err(Error::Ingest("non-finite timestamp".into()));
    }
    if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Ingest(format!(
            "timestamps not strictly ascending at frame {}: {} then {}",
            i + 1,
            timestamps[i],
            timestamps[i + 1]
        )));
    }
    Ok(())
}

pub fn encode_feature_file(timestamps: &[f64], dim: usize, features: &[f64]) -> Result<Vec<u8>> {
    check_timestamps(timestamps)?;
    if features.len() != timestamps.len() * dim {
        return Err(Error::Ingest(format!(
            "{} feature values for {} frames of dim {dim}",
            features.len(),
            timestamps.len()
        )));
    }
    let narrow = |v: usize, what: &str| u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} exceeds u32")));
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * (timestamps.len() + features.len()));
    out.extend_from_slice(&FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    out.extend_from_slice(&narrow(dim, "dim")?.to_le_bytes());
    out.extend_from_slice(&narrow(timestamps.len(), "count")?.to_le_bytes());
    for v in timestamps.iter().chain(features) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses a feature file image into `(timestamps, dim, features)`.
pub fn decode_feature_file(bytes: &[u8]) -> Result<(Vec<f64>, usize, Vec<f64>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Corruption(format!("feature header truncated at {} bytes", bytes.len())));
    }
    if bytes[..4] != FEATURE_MAGIC {
        return Err(Error::Format(format!("bad feature magic {:?}", &bytes[..4])));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4-byte slice"));
    let version = word(4);
    if version != FEATURE_VERSION {
        return Err(Error::Format(format!("unsupported feature version {version}")));
    }
    let dim = word(8) as usize;
    let count = word(12) as usize;
    let expected = count
        .checked_mul(dim + 1)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Corruption("header sizes overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Corruption(format!(
            "payload is {} bytes, header implies {}",
            bytes.len() - HEADER_LEN,
            expected - HEADER_LEN
        )));
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let timestamps: Vec<f64> = values.by_ref().take(count).collect();
    let features: Vec<f64> = values.collect();
    check_timestamps(&timestamps)?;
    Ok((timestamps, dim, features))
}

pub fn write_feature_file(path: &Path, timestamps: &[f64], dim: usize, features: &[f64]) -> Result<()> {
    atomic_write(path, &encode_feature_file(timestamps, dim, features)?)
}

pub fn read_feature_file(path: &Path) -> Result<(Vec<f64>, usize, Vec<f64>)> {
    decode_feature_file(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn short_payload_is_corruption() {
        let ts: Vec<f64> = (0..10).map(f64::from).collect();
        let bytes = encode_feature_file(&ts, 3, &vec![0.5; 30]).unwrap();
        let cut = &bytes[..bytes.len() - 3 * 8];
        assert!(matches!(decode_feature_file(cut), Err(Error::Corruption(_))));
        assert!(matches!(decode_feature_file(&bytes[..10]), Err(Error::Corruption(_))));
    }

    #[test]
    fn empty_video_round_trips() {
        let bytes = encode_feature_file(&[], 7, &[]).unwrap();
        assert_eq!(bytes.len(), 16);
        assert_eq!(decode_feature_file(&bytes).unwrap(), (vec![], 7, vec![]));
    }

    #[test]
    fn header_errors() {
        let mut bytes = encode_feature_file(&[0.0, 1.0], 1, &[1.0, 2.0]).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode_feature_file(&bytes), Err(Error::Format(_))));
        let mut bytes = encode_feature_file(&[0.0, 1.0], 1, &[1.0, 2.0]).unwrap();
        bytes[4] = 9;
        assert!(matches!(decode_feature_file(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn unordered_timestamps_are_ingest_errors() {
        assert!(matches!(encode_feature_file(&[1.0, 1.0], 1, &[0.0, 0.0]), Err(Error::Ingest(_))));
        // hand-build a file whose timestamps go backwards
        let mut bytes = encode_feature_file(&[0.0, 1.0], 1, &[0.0, 0.0]).unwrap();
        bytes[16..24].copy_from_slice(&5.0f64.to_le_bytes());
        assert!(matches!(decode_feature_file(&bytes), Err(Error::Ingest(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.aofv");
        write_feature_file(&p, &[0.0, 0.25], 2, &[1.0, -0.0, f64::MIN_POSITIVE, 3.5]).unwrap();
        let (ts, dim, f) = read_feature_file(&p).unwrap();
        assert_eq!((ts, dim), (vec![0.0, 0.25], 2));
        assert_eq!(f.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), [1.0, -0.0, f64::MIN_POSITIVE, 3.5].map(f64::to_bits));
    }

    proptest! {
        #[test]
        fn random_files_round_trip_bit_exactly(
            gaps in proptest::collection::vec(1e-6f64..5.0, 0..20),
            dim in 1usize..6,
            seed in any::<u64>(),
        ) {
            let mut t = 0.0;
            let ts: Vec<f64> = gaps.iter().map(|g| { t += g; t }).collect();
            let feats: Vec<f64> = (0..ts.len() * dim)
                .map(|i| f64::from_bits(seed.wrapping_mul(i as u64 + 1) >> 2).sin())
                .collect();
            let bytes = encode_feature_file(&ts, dim, &feats).unwrap();
            let (ts2, dim2, f2) = decode_feature_file(&bytes).unwrap();
            prop_assert_eq!(dim2, dim);
            prop_assert_eq!(ts2.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), ts.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!(f2.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), feats.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!(encode_feature_file(&ts2, dim2, &f2).unwrap(), bytes);
        }
    }
}
