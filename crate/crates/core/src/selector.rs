//! The per-video sample selector.
//!
//! A frame's selector score `f` comes from a linear head on its embedding
//! followed by a scaled tanh. Scores are normalized within each video, either
//! exactly over all frames ([`video_softmax_exact`]) or online across batches
//! with an exponential-moving-average denominator ([`VideoAccumulator`]).
//! Online weights are reported as `p/k`, whose expected value is 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::math::{scaled_tanh, scaled_tanh_backward};
use crate::sampling::Modality;

/// Default mixing constant of the online recursions.
pub const DEFAULT_MIXING: f64 = 0.1;

/// Lower bound the tanh scale is projected onto after every optimizer step.
pub const DEFAULT_SCALE_FLOOR: f64 = 0.01;

/// Borrowed view of one selector head: `f = scale · tanh(weight · e + bias)`.
#[derive(Debug, Clone, Copy)]
pub struct SelectorHead<'a> {
    pub weight: &'a [f64],
    pub bias: f64,
    pub scale: f64,
}

/// Intermediate values of a selector forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorScore {
    pub raw: f64,
    pub f: f64,
}

/// Gradients of one selector head plus the gradient flowing into the embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorHeadGrad {
    pub weight: Vec<f64>,
    pub bias: f64,
    pub scale: f64,
    pub embedding: Vec<f64>,
}

impl SelectorHead<'_> {
    pub fn score(&self, embedding: &[f64]) -> Result<SelectorScore> {
        check_len("selector input", self.weight.len(), embedding.len())?;
        let raw = self.bias + self.weight.iter().zip(embedding).map(|(w, e)| w * e).sum::<f64>();
        Ok(SelectorScore {
            raw,
            f: scaled_tanh(raw, self.scale)?,
        })
    }

    /// Backpropagates `∂objective/∂f = upstream`.
    pub fn backward(&self, embedding: &[f64], score: SelectorScore, upstream: f64) -> Result<SelectorHeadGrad> {
        check_len("selector input", self.weight.len(), embedding.len())?;
        let (d_raw, d_scale) = scaled_tanh_backward(score.raw, self.scale, upstream)?;
        Ok(SelectorHeadGrad {
            weight: embedding.iter().map(|e| d_raw * e).collect(),
            bias: d_raw,
            scale: d_scale,
            embedding: self.weight.iter().map(|w| d_raw * w).collect(),
        })
    }
}

/// Exact softmax over the scores of every frame of one video.
pub fn video_softmax_exact(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyVideo);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("selector scores must be finite".into()));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// The online-normalized selector value `p_θ(frame) / k`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SelectorWeight(pub f64);

impl SelectorWeight {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Product of the three factorized frame weights of a triplet.
pub fn triplet_weight(p_x: SelectorWeight, p_z: SelectorWeight, p_z_prime: SelectorWeight) -> f64 {
    p_x.0 * p_z.0 * p_z_prime.0
}

/// Gradient of the importance-weighted objective with respect to a
/// pre-normalization selector score: `p · (l − L)`.
///
/// Positive when the sample's loss exceeds the running average, so descent
/// lowers the weight of hard samples and raises it for easy ones.
pub fn selector_gradient(p: f64, loss: f64, running_loss: f64) -> f64 {
    p * (loss - running_loss)
}

/// How the first observation of a video seeds its running denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub enum SigmaInit {
    /// `Σ ← e^f` of the first frame seen, so the first `p/k` is exactly 1.
    #[default]
    FirstObservation,
    /// Treat `Σ_0` as this constant and apply the recursion from the start.
    Constant(f64),
}

/// Running per-video denominator `Σ_N` of the online video softmax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoAccumulator {
    pub sigma: f64,
    pub count: u64,
    pub k: f64,
}

impl VideoAccumulator {
    pub fn new(k: f64) -> Self {
        Self {
            sigma: 0.0,
            count: 0,
            k,
        }
    }

    /// Folds in one selector score and returns the frame's `p/k`.
    pub fn observe(&mut self, f: f64, init: SigmaInit) -> SelectorWeight {
        let e = f.exp();
        self.sigma = match (self.count, init) {
            (0, SigmaInit::FirstObservation) => e,
            (0, SigmaInit::Constant(sigma0)) => self.k * e + (1.0 - self.k) * sigma0,
            _ => self.k * e + (1.0 - self.k) * self.sigma,
        };
        self.count += 1;
        SelectorWeight(e / self.sigma)
    }
}

/// Functional form of [`VideoAccumulator::observe`].
pub fn accumulator_update(acc: &VideoAccumulator, f: f64, init: SigmaInit) -> (SelectorWeight, VideoAccumulator) {
    let mut next = *acc;
    let w = next.observe(f, init);
    (w, next)
}

/// Identity of a video's running accumulator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VideoKey {
    pub video_id: String,
    pub modality: Modality,
}

/// All per-video accumulators, ordered by key for stable serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumulatorBank {
    pub k: f64,
    pub init: SigmaInit,
    pub videos: BTreeMap<VideoKey, VideoAccumulator>,
}

impl AccumulatorBank {
    pub fn new(k: f64, init: SigmaInit) -> Result<Self> {
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::Config(format!("mixing constant k must lie in (0,1), got {k}")));
        }
        Ok(Self {
            k,
            init,
            videos: BTreeMap::new(),
        })
    }

    pub fn observe(&mut self, key: &VideoKey, f: f64) -> SelectorWeight {
        let k = self.k;
        let init = self.init;
        if let Some(acc) = self.videos.get_mut(key) {
            return acc.observe(f, init);
        }
        let acc = self.videos.entry(key.clone()).or_insert_with(|| VideoAccumulator::new(k));
        acc.observe(f, init)
    }

    pub fn reset(&mut self) {
        self.videos.clear();
    }
}
