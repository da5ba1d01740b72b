//! C ABI over `firstthird`.
//!
//! Datasets and trained states cross the boundary as opaque handles. Every
//! fallible call returns an [`FtStatus`]; on failure the message is kept per
//! thread and read back with [`ft_last_error`]. Panics are caught and
//! reported as `FT_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use firstthird::evaluation::{alignment_summary, correspondence_accuracy, zero_shot_video};
use firstthird::io::{load_checkpoint, load_dataset, save_checkpoint, KeyValueConfig};
use firstthird::objective::triplet_loss;
use firstthird::sampling::{enumerate_test_triplets, Modality, PairIndex};
use firstthird::synth::{generate_synthetic, write_dataset, SyntheticConfig};
use firstthird::training::{train, TrainConfig, TrainState};
use firstthird::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Shape = 3,
    Constraint = 4,
    Numeric = 5,
    EmptyVideo = 6,
    MalformedPair = 7,
    Ingest = 8,
    DegenerateVideo = 9,
    InfeasiblePair = 10,
    ScenarioMismatch = 11,
    Ordering = 12,
    Config = 13,
    MalformedItem = 14,
    NonFinite = 15,
    Mode = 16,
    Format = 17,
    Corruption = 18,
    Io = 19,
    OutOfRange = 20,
    BufferTooSmall = 21,
    Panic = 99,
}

impl From<&Error> for FtStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Shape { .. } => FtStatus::Shape,
            Error::Constraint(_) => FtStatus::Constraint,
            Error::Numeric(_) => FtStatus::Numeric,
            Error::EmptyVideo => FtStatus::EmptyVideo,
            Error::MalformedPair(_) => FtStatus::MalformedPair,
            Error::Ingest(_) => FtStatus::Ingest,
            Error::DegenerateVideo(_) => FtStatus::DegenerateVideo,
            Error::InfeasiblePair(_) => FtStatus::InfeasiblePair,
            Error::ScenarioMismatch(..) => FtStatus::ScenarioMismatch,
            Error::Ordering(_) => FtStatus::Ordering,
            Error::Config(_) => FtStatus::Config,
            Error::MalformedItem(_) => FtStatus::MalformedItem,
            Error::NonFinite(_) => FtStatus::NonFinite,
            Error::Mode(_) => FtStatus::Mode,
            Error::Format(_) | Error::Json(_) | Error::Csv(_) => FtStatus::Format,
            Error::Corruption(_) => FtStatus::Corruption,
            Error::Io(_) => FtStatus::Io,
        }
    }
}

/// Viewpoint of a frame passed to [`ft_model_embed`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtModality {
    ThirdPerson = 0,
    FirstPerson = 1,
}

/// A loaded or generated set of paired videos.
pub struct FtDataset {
    index: PairIndex,
}

/// A trained or checkpointed model with its optimizer and selector state.
pub struct FtModel {
    state: TrainState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(FtStatus::from(&e), e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FtStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(Failure(FtStatus::Panic, msg))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FtStatus::Ok
        }
        Err(Failure(status, msg)) => {
            let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
            LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
            status
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FtStatus::NullArgument, format!("{what} is null"))
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure(FtStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Optional `key = value` text; null means defaults.
unsafe fn overrides(ptr: *const c_char) -> Result<Option<KeyValueConfig>, Failure> {
    if ptr.is_null() {
        return Ok(None);
    }
    Ok(Some(KeyValueConfig::parse(text(ptr, "config text")?)?))
}

fn test_pairs(model: &FtModel, data: &FtDataset) -> Result<Vec<usize>, Failure> {
    model
        .state
        .split
        .test
        .iter()
        .map(|id| {
            data.index
                .position(id)
                .ok_or_else(|| Failure(FtStatus::Ingest, format!("held-out pair {id} missing from dataset")))
        })
        .collect()
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ft_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ft_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `logistic(d_pos − d_neg)`.
///
/// # Safety
/// `out` must be null or point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn ft_triplet_loss(d_pos: f64, d_neg: f64, out: *mut f64) -> FtStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = triplet_loss(d_pos, d_neg).l;
        Ok(())
    })
}

/// Generates a planted synthetic dataset. `config` holds optional
/// `key = value` lines; `seed` overrides any seed there. When `out_dir` is
/// non-null the dataset is also written there as a manifest plus feature files.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ft_synth_generate(
    config: *const c_char,
    seed: u64,
    out_dir: *const c_char,
    out: *mut *mut FtDataset,
) -> FtStatus {
    guard(|| {
        let mut cfg = SyntheticConfig::default();
        if let Some(kv) = overrides(config)? {
            kv.apply_synth(&mut cfg)?;
        }
        cfg.seed = seed;
        let ds = generate_synthetic(&cfg)?;
        if !out_dir.is_null() {
            write_dataset(&ds, Path::new(text(out_dir, "output directory")?))?;
        }
        store(out, FtDataset { index: ds.index })
    })
}

/// Loads a dataset from a JSONL manifest; `n_classes` of 0 skips the label range check.
///
/// # Safety
/// `manifest` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ft_dataset_load(manifest: *const c_char, n_classes: usize, out: *mut *mut FtDataset) -> FtStatus {
    guard(|| {
        let path = text(manifest, "manifest path")?;
        let index = load_dataset(Path::new(path), (n_classes > 0).then_some(n_classes))?;
        store(out, FtDataset { index })
    })
}

/// Number of pairs, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ft_dataset_pair_count(data: *const FtDataset) -> usize {
    data.as_ref().map_or(0, |d| d.index.len())
}

/// Per-frame feature dimension, or 0 for a null or empty dataset.
///
/// # Safety
/// `data` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ft_dataset_feature_dim(data: *const FtDataset) -> usize {
    data.as_ref().and_then(|d| d.index.feature_dim()).unwrap_or(0)
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ft_dataset_free(data: *mut FtDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Trains a model. `config` holds optional `key = value` lines over the defaults.
///
/// # Safety
/// `data` must be a live handle, `config` null or NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_train(data: *const FtDataset, config: *const c_char, out: *mut *mut FtModel) -> FtStatus {
    guard(|| {
        let data = handle(data, "dataset")?;
        let mut cfg = TrainConfig::default();
        if let Some(kv) = overrides(config)? {
            kv.apply_train(&mut cfg)?;
        }
        let state = train(cfg, &data.index)?;
        store(out, FtModel { state })
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ft_model_load(path: *const c_char, out: *mut *mut FtModel) -> FtStatus {
    guard(|| {
        let state = load_checkpoint(Path::new(text(path, "checkpoint path")?))?;
        store(out, FtModel { state })
    })
}

/// # Safety
/// `model` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ft_model_save(model: *const FtModel, path: *const c_char) -> FtStatus {
    guard(|| {
        let model = handle(model, "model")?;
        save_checkpoint(Path::new(text(path, "checkpoint path")?), &model.state)?;
        Ok(())
    })
}

/// Embedding width, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ft_model_embed_dim(model: *const FtModel) -> usize {
    model.as_ref().map_or(0, |m| m.state.model.config.embed_dim)
}

/// Embeds one frame into `out[0..out_len]`; `out_len` must equal the embedding width.
///
/// # Safety
/// `features` must hold `n_features` doubles and `out` room for `out_len`.
#[no_mangle]
pub unsafe extern "C" fn ft_model_embed(
    model: *const FtModel,
    modality: FtModality,
    features: *const f64,
    n_features: usize,
    out: *mut f64,
    out_len: usize,
) -> FtStatus {
    guard(|| {
        let model = handle(model, "model")?;
        if features.is_null() || out.is_null() {
            return Err(null("buffer"));
        }
        let modality = match modality {
            FtModality::ThirdPerson => Modality::ThirdPerson,
            FtModality::FirstPerson => Modality::FirstPerson,
        };
        let emb = model.state.model.embed(modality, std::slice::from_raw_parts(features, n_features))?;
        if out_len != emb.len() {
            return Err(Failure(
                FtStatus::BufferTooSmall,
                format!("output holds {out_len} values, embedding has {}", emb.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(&emb);
        Ok(())
    })
}

/// Held-out correspondence accuracy over all test triplets, and at the top
/// `fraction` of triplets ranked by selector weight.
///
/// # Safety
/// Handles must be live; `acc_all` and `acc_top` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_eval_correspondence(
    model: *const FtModel,
    data: *const FtDataset,
    fraction: f64,
    acc_all: *mut f64,
    acc_top: *mut f64,
) -> FtStatus {
    guard(|| {
        let (model, data) = (handle(model, "model")?, handle(data, "dataset")?);
        let (acc_all, acc_top) = (acc_all.as_mut().ok_or_else(|| null("acc_all"))?, acc_top.as_mut().ok_or_else(|| null("acc_top"))?);
        let sampler = model.state.config.sampler();
        let mut triplets = Vec::new();
        for p in test_pairs(model, data)? {
            triplets.extend(enumerate_test_triplets(&data.index, p, &sampler)?);
        }
        let r = correspondence_accuracy(&model.state.model, &data.index, &triplets, &[fraction])?;
        *acc_all = r.accuracy_all;
        *acc_top = r.at(fraction).unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Median held-out alignment error in seconds for moments of `moment_seconds`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_eval_alignment(
    model: *const FtModel,
    data: *const FtDataset,
    moment_seconds: f64,
    out: *mut f64,
) -> FtStatus {
    guard(|| {
        let (model, data) = (handle(model, "model")?, handle(data, "dataset")?);
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let pairs = test_pairs(model, data)?;
        *out = alignment_summary(&model.state.model, &data.index, &pairs, moment_seconds)?.median_error;
        Ok(())
    })
}

/// Zero-shot class probabilities of pair `pair`'s first-person video.
/// Writes `n_classes` values; fails with `FT_STATUS_MODE` without a classifier.
///
/// # Safety
/// Handles must be live; `out` must have room for `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ft_zero_shot(
    model: *const FtModel,
    data: *const FtDataset,
    pair: usize,
    out: *mut f64,
    out_len: usize,
) -> FtStatus {
    guard(|| {
        let (model, data) = (handle(model, "model")?, handle(data, "dataset")?);
        if out.is_null() {
            return Err(null("out"));
        }
        if pair >= data.index.len() {
            return Err(Failure(FtStatus::OutOfRange, format!("pair {pair} of {}", data.index.len())));
        }
        let probs = zero_shot_video(&model.state.model, &data.index, pair)?;
        if out_len != probs.len() {
            return Err(Failure(
                FtStatus::BufferTooSmall,
                format!("output holds {out_len} values, model has {} classes", probs.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(&probs);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ft_model_free(model: *mut FtModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
