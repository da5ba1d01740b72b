//! `AOCK` checkpoints: everything needed to resume training bit-exactly.
//!
//! Layout (little-endian): magic, `u32` version, then length-prefixed
//! sections in a fixed order: training config (JSON), model config (JSON),
//! parameters, momentum buffers, optimizer scalars, per-video accumulators,
//! running-loss state, split manifest, epoch history and skipped pairs.
//! Floats are stored as raw 64-bit patterns; strings and vectors carry a
//! `u64` length.

use std::collections::BTreeMap;
use std::path::Path;

use super::atomic_write;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParameters};
use crate::objective::RunningLossState;
use crate::sampling::{Modality, SplitManifest};
use crate::selector::{AccumulatorBank, SigmaInit, VideoAccumulator, VideoKey};
use crate::training::{EpochStats, OptimizerState, TrainConfig, TrainState};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"AOCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Default)]
struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }
    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        self.len(v.len());
        for x in v {
            self.f64(*x);
        }
    }
    fn strs(&mut self, v: &[String]) {
        self.len(v.len());
        for s in v {
            self.str(s);
        }
    }
}

struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Corruption(format!("checkpoint truncated: need {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    /// A length prefix, sanity-checked against the bytes that remain.
    fn len(&mut self, min_item_bytes: usize) -> Result<usize> {
        let n = self.u64()?;
        let remaining = (self.bytes.len() - self.pos) as u64;
        if n.saturating_mul(min_item_bytes as u64) > remaining {
            return Err(Error::Corruption(format!("length {n} exceeds remaining {remaining} bytes")));
        }
        Ok(n as usize)
    }
    fn str(&mut self) -> Result<String> {
        let n = self.len(1)?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| Error::Corruption(format!("invalid utf-8: {e}")))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn strs(&mut self) -> Result<Vec<String>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.str()).collect()
    }
}

fn encode_sigma_init(e: &mut Encoder, init: SigmaInit) {
    match init {
        SigmaInit::FirstObservation => {
            e.u8(0);
            e.f64(0.0);
        }
        SigmaInit::Constant(s) => {
            e.u8(1);
            e.f64(s);
        }
    }
}

pub fn write_checkpoint(state: &TrainState) -> Result<Vec<u8>> {
    let mut e = Encoder::default();
    e.buf.extend_from_slice(&CHECKPOINT_MAGIC);
    e.buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    e.str(&serde_json::to_string(&state.config)?);
    e.str(&serde_json::to_string(&state.model.config)?);
    e.f64s(&state.model.values);

    let o = &state.optimizer;
    e.f64s(&o.velocity);
    e.f64(o.learning_rate);
    e.f64(o.momentum);
    e.u64(o.epoch as u64);
    e.u64(o.steps);

    let a = &state.accumulators;
    e.f64(a.k);
    encode_sigma_init(&mut e, a.init);
    e.len(a.videos.len());
    for (key, acc) in &a.videos {
        e.str(&key.video_id);
        e.u8(key.modality.tag());
        e.f64(acc.sigma);
        e.u64(acc.count);
        e.f64(acc.k);
    }

    let r = &state.running;
    e.f64(r.loss);
    e.f64(r.sigma);
    e.u64(r.count);
    e.f64(r.k);

    e.strs(&state.split.train);
    e.strs(&state.split.test);
    e.len(state.history.len());
    for h in &state.history {
        e.u64(h.epoch as u64);
        e.f64(h.learning_rate);
        e.u64(h.steps as u64);
        for v in [h.mean_loss, h.weighted_loss, h.running_loss, h.classification_loss] {
            e.f64(v);
        }
    }
    e.strs(&state.skipped_pairs);
    Ok(e.buf)
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<TrainState> {
    if bytes.len() < 8 {
        return Err(Error::Corruption("checkpoint header truncated".into()));
    }
    if bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!("bad checkpoint magic {:?}", &bytes[..4])));
    }
    let mut d = Decoder { bytes, pos: 4 };
    let version = d.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let config: TrainConfig = serde_json::from_str(&d.str()?).map_err(|e| Error::Corruption(format!("config echo: {e}")))?;
    let model_config: ModelConfig =
        serde_json::from_str(&d.str()?).map_err(|e| Error::Corruption(format!("model config: {e}")))?;
    let model = ModelParameters::from_values(model_config, d.f64s()?)
        .map_err(|e| Error::Corruption(format!("parameters: {e}")))?;

    let velocity = d.f64s()?;
    if velocity.len() != model.param_count() {
        return Err(Error::Corruption(format!(
            "{} momentum values for {} parameters",
            velocity.len(),
            model.param_count()
        )));
    }
    let optimizer = OptimizerState {
        velocity,
        learning_rate: d.f64()?,
        momentum: d.f64()?,
        epoch: d.u64()? as usize,
        steps: d.u64()?,
    };

    let k = d.f64()?;
    let init = match (d.u8()?, d.f64()?) {
        (0, _) => SigmaInit::FirstObservation,
        (1, s) => SigmaInit::Constant(s),
        (t, _) => return Err(Error::Corruption(format!("unknown sigma-init tag {t}"))),
    };
    let n = d.len(8)?;
    let mut videos = BTreeMap::new();
    for _ in 0..n {
        let video_id = d.str()?;
        let tag = d.u8()?;
        let modality = Modality::from_tag(tag).ok_or_else(|| Error::Corruption(format!("unknown modality tag {tag}")))?;
        let acc = VideoAccumulator {
            sigma: d.f64()?,
            count: d.u64()?,
            k: d.f64()?,
        };
        videos.insert(VideoKey { video_id, modality }, acc);
    }
    let accumulators = AccumulatorBank { k, init, videos };

    let running = RunningLossState {
        loss: d.f64()?,
        sigma: d.f64()?,
        count: d.u64()?,
        k: d.f64()?,
    };
    let split = SplitManifest {
        train: d.strs()?,
        test: d.strs()?,
    };
    let n = d.len(8)?;
    let mut history = Vec::with_capacity(n);
    for _ in 0..n {
        history.push(EpochStats {
            epoch: d.u64()? as usize,
            learning_rate: d.f64()?,
            steps: d.u64()? as usize,
            mean_loss: d.f64()?,
            weighted_loss: d.f64()?,
            running_loss: d.f64()?,
            classification_loss: d.f64()?,
        });
    }
    let skipped_pairs = d.strs()?;
    if d.pos != bytes.len() {
        return Err(Error::Corruption(format!("{} trailing bytes", bytes.len() - d.pos)));
    }
    Ok(TrainState {
        config,
        model,
        optimizer,
        accumulators,
        running,
        split,
        history,
        skipped_pairs,
    })
}

pub fn save_checkpoint(path: &Path, state: &TrainState) -> Result<()> {
    atomic_write(path, &write_checkpoint(state)?)
}

pub fn load_checkpoint(path: &Path) -> Result<TrainState> {
    read_checkpoint(&std::fs::read(path)?)
}
