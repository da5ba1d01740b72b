//! Evaluation protocols over a frozen embedder: triplet correspondence with
//! selector-ranked subsets, one-second moment alignment, zero-shot video
//! classification with mAP, and nearest-neighbor retrieval.
//!
//! Selector weights at test time come from the exact per-video softmax over
//! the whole video, never from the online accumulators.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::math::l2_distance;
use crate::model::{ModelParameters, StreamRole};
use crate::sampling::{pair_seed, FrameId, Modality, PairIndex, TimeMap, TripletSample};

/// Anything that maps frames to embeddings, optionally with selector scores.
pub trait FrameEmbedder {
    fn embed(&self, index: &PairIndex, id: FrameId) -> Result<Vec<f64>>;

    /// Selector scores `f` for every frame of one video under `role`'s head;
    /// `None` means every frame weighs the same.
    fn selector_scores(&self, _index: &PairIndex, _pair: usize, _role: StreamRole) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }
}

fn role_modality(role: StreamRole) -> Modality {
    match role {
        StreamRole::Third => Modality::ThirdPerson,
        _ => Modality::FirstPerson,
    }
}

impl FrameEmbedder for ModelParameters {
    fn embed(&self, index: &PairIndex, id: FrameId) -> Result<Vec<f64>> {
        ModelParameters::embed(self, id.modality, index.frame(id).features)
    }

    fn selector_scores(&self, index: &PairIndex, pair: usize, role: StreamRole) -> Result<Option<Vec<f64>>> {
        let modality = role_modality(role);
        let video = index.video(pair, modality);
        (0..video.len())
            .map(|i| {
                let emb = ModelParameters::embed(self, modality, video.frame(i))?;
                Ok(self.selector_score(role, &emb)?.f)
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

/// Raw ingested features used directly as embeddings.
#[derive(Debug, Clone, Copy, Default)]
pub struct RawFeatures;

impl FrameEmbedder for RawFeatures {
    fn embed(&self, index: &PairIndex, id: FrameId) -> Result<Vec<f64>> {
        Ok(index.frame(id).features.to_vec())
    }
}

/// I.i.d. Gaussian embeddings, a pure function of (seed, video, frame).
#[derive(Debug, Clone, Copy)]
pub struct RandomEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl FrameEmbedder for RandomEmbedder {
    fn embed(&self, index: &PairIndex, id: FrameId) -> Result<Vec<f64>> {
        let video = index.video(id.pair, id.modality);
        let mut rng = ChaCha8Rng::seed_from_u64(pair_seed(self.seed, &video.id, &id.frame.to_string()));
        Ok((0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect())
    }
}

/// Embeddings (and optionally selector scores) supplied by closures; used
/// for oracle models with access to planted ground truth.
pub struct ClosureEmbedder<E, S = fn(&PairIndex, usize, StreamRole) -> Option<Vec<f64>>> {
    pub embed: E,
    pub scores: Option<S>,
}

impl<E> ClosureEmbedder<E>
where
    E: Fn(&PairIndex, FrameId) -> Vec<f64>,
{
    pub fn new(embed: E) -> Self {
        Self { embed, scores: None }
    }
}

impl<E, S> FrameEmbedder for ClosureEmbedder<E, S>
where
    E: Fn(&PairIndex, FrameId) -> Vec<f64>,
    S: Fn(&PairIndex, usize, StreamRole) -> Option<Vec<f64>>,
{
    fn embed(&self, index: &PairIndex, id: FrameId) -> Result<Vec<f64>> {
        Ok((self.embed)(index, id))
    }

    fn selector_scores(&self, index: &PairIndex, pair: usize, role: StreamRole) -> Result<Option<Vec<f64>>> {
        Ok(self.scores.as_ref().and_then(|s| s(index, pair, role)))
    }
}

/// Embeddings of every frame of one video.
pub fn embed_video<M: FrameEmbedder + ?Sized>(
    model: &M,
    index: &PairIndex,
    pair: usize,
    modality: Modality,
) -> Result<Vec<Vec<f64>>> {
    (0..index.video(pair, modality).len())
        .map(|frame| model.embed(index, FrameId { pair, modality, frame }))
        .collect()
}

fn log_softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scores.iter().map(|s| s - lse).collect()
}

/// Lazily computed per-video embeddings and log selector weights.
struct VideoCache<'m, M: ?Sized> {
    model: &'m M,
    index: &'m PairIndex,
    embeddings: HashMap<(usize, Modality), Vec<Vec<f64>>>,
    log_weights: HashMap<(usize, StreamRole), Vec<f64>>,
}

impl<'m, M: FrameEmbedder + ?Sized> VideoCache<'m, M> {
    fn new(model: &'m M, index: &'m PairIndex) -> Self {
        Self {
            model,
            index,
            embeddings: HashMap::new(),
            log_weights: HashMap::new(),
        }
    }

    fn embedding(&mut self, id: FrameId) -> Result<&[f64]> {
        let key = (id.pair, id.modality);
        if !self.embeddings.contains_key(&key) {
            let v = embed_video(self.model, self.index, id.pair, id.modality)?;
            self.embeddings.insert(key, v);
        }
        Ok(&self.embeddings[&key][id.frame])
    }

    fn log_weight(&mut self, id: FrameId, role: StreamRole) -> Result<f64> {
        let key = (id.pair, role);
        if !self.log_weights.contains_key(&key) {
            let n = self.index.video(id.pair, role_modality(role)).len();
            let lw = match self.model.selector_scores(self.index, id.pair, role)? {
                Some(s) => {
                    check_len("selector scores", n, s.len())?;
                    log_softmax(&s)
                }
                None => vec![-(n as f64).ln(); n],
            };
            self.log_weights.insert(key, lw);
        }
        Ok(self.log_weights[&key][id.frame])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionAccuracy {
    pub fraction: f64,
    pub accuracy: f64,
    pub n_selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceResult {
    pub accuracy_all: f64,
    pub accuracy_at: Vec<SelectionAccuracy>,
    pub n_triplets: usize,
}

impl CorrespondenceResult {
    pub fn at(&self, fraction: f64) -> Option<f64> {
        self.accuracy_at.iter().find(|s| s.fraction == fraction).map(|s| s.accuracy)
    }
}

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.5, 0.1, 0.05];

/// Accuracy over all items and over the top `fraction` of items ranked by
/// `weights` (descending, ties broken by `keys`).
pub fn ranked_accuracy<K: Ord>(correct: &[bool], weights: &[f64], keys: &[K], fractions: &[f64]) -> Result<CorrespondenceResult> {
    let n = correct.len();
    if n == 0 {
        return Err(Error::Config("no triplets to evaluate".into()));
    }
    check_len("triplet weights", n, weights.len())?;
    check_len("triplet keys", n, keys.len())?;
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(Error::Config(format!("selection fraction {f} outside (0,1]")));
    }
    if weights.iter().any(|w| w.is_nan()) {
        return Err(Error::Numeric("NaN triplet weight".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then_with(|| keys[a].cmp(&keys[b])));
    let hits = correct.iter().filter(|&&c| c).count();
    let accuracy_at = fractions
        .iter()
        .map(|&fraction| {
            let take = ((fraction * n as f64).ceil() as usize).clamp(1, n);
            let good = order[..take].iter().filter(|&&i| correct[i]).count();
            SelectionAccuracy {
                fraction,
                accuracy: good as f64 / take as f64,
                n_selected: take,
            }
        })
        .collect();
    Ok(CorrespondenceResult {
        accuracy_all: hits as f64 / n as f64,
        accuracy_at,
        n_triplets: n,
    })
}

/// Per-triplet correctness (`d_pos < d_neg`) and log selector weight
/// `log p(x) + log p(z) + log p(z′)`.
pub fn score_triplets<M: FrameEmbedder + ?Sized>(
    model: &M,
    index: &PairIndex,
    triplets: &[TripletSample],
) -> Result<(Vec<bool>, Vec<f64>)> {
    let mut cache = VideoCache::new(model, index);
    let mut correct = Vec::with_capacity(triplets.len());
    let mut log_w = Vec::with_capacity(triplets.len());
    for t in triplets {
        let x = cache.embedding(t.x)?.to_vec();
        let d_pos = l2_distance(&x, cache.embedding(t.z)?)?;
        let d_neg = l2_distance(&x, cache.embedding(t.z_prime)?)?;
        correct.push(d_pos < d_neg);
        log_w.push(
            cache.log_weight(t.x, StreamRole::Third)?
                + cache.log_weight(t.z, StreamRole::EgoPositive)?
                + cache.log_weight(t.z_prime, StreamRole::EgoNegative)?,
        );
    }
    Ok((correct, log_w))
}

/// Triplet accuracy overall and on the selector's most confident subsets.
///
/// Ranking uses the log of the triplet weight, which orders identically to
/// the weight itself but cannot underflow.
pub fn correspondence_accuracy<M: FrameEmbedder + ?Sized>(
    model: &M,
    index: &PairIndex,
    triplets: &[TripletSample],
    fractions: &[f64],
) -> Result<CorrespondenceResult> {
    let (correct, log_w) = score_triplets(model, index, triplets)?;
    ranked_accuracy(&correct, &log_w, triplets, fractions)
}

/// Distance-margin weight `d_neg − d_pos` of a triplet's three feature vectors.
pub fn baseline_weight(x: &[f64], z: &[f64], z_prime: &[f64]) -> Result<f64> {
    Ok(l2_distance(x, z_prime)? - l2_distance(x, z)?)
}

/// Correctness under `model`, ranked by the margin weight measured by `weigher`
/// (raw features for the classic baseline, or the model's own embeddings).
pub fn baseline_correspondence<M, W>(
    model: &M,
    weigher: &W,
    index: &PairIndex,
    triplets: &[TripletSample],
    fractions: &[f64],
) -> Result<CorrespondenceResult>
where
    M: FrameEmbedder + ?Sized,
    W: FrameEmbedder + ?Sized,
{
    let (correct, _) = score_triplets(model, index, triplets)?;
    let mut cache = VideoCache::new(weigher, index);
    let mut weights = Vec::with_capacity(triplets.len());
    for t in triplets {
        let x = cache.embedding(t.x)?.to_vec();
        let z = cache.embedding(t.z)?.to_vec();
        weights.push(baseline_weight(&x, &z, cache.embedding(t.z_prime)?)?);
    }
    ranked_accuracy(&correct, &weights, triplets, fractions)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentOutcome {
    pub third_start: f64,
    pub ego_start: f64,
    /// `|third_start − ego_start mapped onto the third-person timeline|`.
    pub error: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub pair_ids: Vec<String>,
    pub per_pair_error: Vec<f64>,
    pub median_error: f64,
    pub mean_error: f64,
}

/// `[start, end)` frame ranges of every moment of `length` seconds that fits
/// inside the video, one per start frame.
fn moments(timestamps: &[f64], length: f64) -> Vec<(usize, usize)> {
    let last = *timestamps.last().expect("non-empty video");
    let slack = 1e-9 * length;
    let mut out = Vec::new();
    let mut end = 0;
    for (start, &t) in timestamps.iter().enumerate() {
        if t + length > last + slack {
            break;
        }
        end = end.max(start + 1);
        while end < timestamps.len() && timestamps[end] < t + length - slack {
            end += 1;
        }
        out.push((start, end));
    }
    out
}

/// Finds the pair of `moment_seconds` windows, one per video, whose frames
/// are closest on average, and reports how far the choice is from the
/// time-mapped ground truth.
///
/// Window scores are the mean over all cross-modal frame pairs, so videos
/// with different frame rates are not biased toward sparse windows. Ties go
/// to the earliest third-person, then earliest ego window.
pub fn align_pair<M: FrameEmbedder + ?Sized>(
    model: &M,
    index: &PairIndex,
    pair: usize,
    moment_seconds: f64,
) -> Result<AlignmentOutcome> {
    let p = &index.pairs[pair];
    if !(moment_seconds > 0.0) {
        return Err(Error::Config(format!("moment length must be positive, got {moment_seconds}")));
    }
    for v in [&p.third, &p.ego] {
        if v.is_empty() || v.duration() < moment_seconds {
            return Err(Error::DegenerateVideo(format!(
                "{} lasts {} s, shorter than a {moment_seconds} s moment",
                v.id,
                if v.is_empty() { 0.0 } else { v.duration() }
            )));
        }
    }
    let tm = TimeMap::new(p.third.duration(), p.ego.duration())?;
    let third = embed_video(model, index, pair, Modality::ThirdPerson)?;
    let ego = embed_video(model, index, pair, Modality::FirstPerson)?;
    let (n3, ne) = (third.len(), ego.len());

    // 2-D prefix sums of the cross-modal distance matrix
    let mut prefix = vec![0.0; (n3 + 1) * (ne + 1)];
    let at = |i: usize, j: usize| i * (ne + 1) + j;
    for i in 0..n3 {
        for j in 0..ne {
            let d = l2_distance(&third[i], &ego[j])?;
            prefix[at(i + 1, j + 1)] = d + prefix[at(i, j + 1)] + prefix[at(i + 1, j)] - prefix[at(i, j)];
        }
    }
    let rect = |(a0, a1): (usize, usize), (b0, b1): (usize, usize)| {
        prefix[at(a1, b1)] - prefix[at(a0, b1)] - prefix[at(a1, b0)] + prefix[at(a0, b0)]
    };

    let mut best: Option<(f64, usize, usize)> = None;
    for &a in &moments(&p.third.timestamps, moment_seconds) {
        for &b in &moments(&p.ego.timestamps, moment_seconds) {
            let score = rect(a, b) / ((a.1 - a.0) * (b.1 - b.0)) as f64;
            if best.is_none_or(|(s, _, _)| score < s) {
                best = Some((score, a.0, b.0));
            }
        }
    }
    let (score, i, j) = best.ok_or_else(|| Error::DegenerateVideo(format!("pair {}: no moments", p.id)))?;
    let third_start = p.third.timestamps[i];
    let ego_start = p.ego.timestamps[j];
    Ok(AlignmentOutcome {
        third_start,
        ego_start,
        error: (third_start - tm.to_third(ego_start)).abs(),
        score,
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn alignment_summary<M: FrameEmbedder + ?Sized>(
    model: &M,
    index: &PairIndex,
    pairs: &[usize],
    moment_seconds: f64,
) -> Result<AlignmentResult> {
    if pairs.is_empty() {
        return Err(Error::Config("no pairs to align".into()));
    }
    let per_pair_error = pairs
        .iter()
        .map(|&p| Ok(align_pair(model, index, p, moment_seconds)?.error))
        .collect::<Result<Vec<_>>>()?;
    Ok(AlignmentResult {
        pair_ids: pairs.iter().map(|&p| index.pairs[p].id.clone()).collect(),
        median_error: median(&per_pair_error),
        mean_error: per_pair_error.iter().sum::<f64>() / per_pair_error.len() as f64,
        per_pair_error,
    })
}

/// Monte-Carlo alignment error when both moment starts are chosen uniformly
/// at random, with the videos' own frame grids.
pub fn simulated_random_alignment(index: &PairIndex, pairs: &[usize], moment_seconds: f64, draws_per_pair: usize, seed: u64) -> Result<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::with_capacity(pairs.len() * draws_per_pair);
    for &p in pairs {
        let pair = &index.pairs[p];
        let tm = TimeMap::new(pair.third.duration(), pair.ego.duration())?;
        let a = moments(&pair.third.timestamps, moment_seconds);
        let b = moments(&pair.ego.timestamps, moment_seconds);
        if a.is_empty() || b.is_empty() {
            return Err(Error::DegenerateVideo(format!("pair {}: no moments", pair.id)));
        }
        for _ in 0..draws_per_pair {
            let i = a[rng.random_range(0..a.len())].0;
            let j = b[rng.random_range(0..b.len())].0;
            errors.push((pair.third.timestamps[i] - tm.to_third(pair.ego.timestamps[j])).abs());
        }
    }
    Ok(median(&errors))
}

/// Video-level class scores: per-frame logistic probabilities of the
/// first-person frames, mean-pooled.
///
/// Each class's frame probabilities are summed in sorted order, so the
/// result does not depend on frame order even in the last bit.
pub fn zero_shot_predict(model: &ModelParameters, frames: &[&[f64]]) -> Result<Vec<f64>> {
    if !model.has_classifier() {
        return Err(Error::Mode("zero-shot prediction needs a classifier head".into()));
    }
    if frames.is_empty() {
        return Err(Error::EmptyVideo);
    }
    let per_frame = frames
        .iter()
        .map(|f| model.class_probabilities(Modality::FirstPerson, f))
        .collect::<Result<Vec<_>>>()?;
    let n_classes = per_frame[0].len();
    Ok((0..n_classes)
        .map(|c| {
            let mut col: Vec<f64> = per_frame.iter().map(|p| p[c]).collect();
            col.sort_by(f64::total_cmp);
            // offsets from the smallest value keep constant columns exact
            let base = col[0];
            base + col.iter().map(|p| p - base).sum::<f64>() / col.len() as f64
        })
        .collect())
}

pub fn zero_shot_video(model: &ModelParameters, index: &PairIndex, pair: usize) -> Result<Vec<f64>> {
    let v = &index.pairs[pair].ego;
    let frames: Vec<&[f64]> = (0..v.len()).map(|i| v.frame(i)).collect();
    zero_shot_predict(model, &frames)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroShotResult {
    /// `None` for classes without positives, which are left out of the mean.
    pub per_class_ap: Vec<Option<f64>>,
    pub map: f64,
}

/// Non-interpolated AP of one class: precision at each positive's rank,
/// averaged over positives. Videos rank by score descending, ties by index.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<Option<f64>> {
    check_len("labels", scores.len(), labels.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN class score".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(Some(sum / positives as f64))
}

/// Mean over classes (with at least one positive) of per-class AP.
pub fn video_map(scores: &[Vec<f64>], labels: &[Vec<bool>]) -> Result<ZeroShotResult> {
    if scores.is_empty() {
        return Err(Error::Config("no videos to score".into()));
    }
    check_len("label rows", scores.len(), labels.len())?;
    let c = scores[0].len();
    for (s, l) in scores.iter().zip(labels) {
        check_len("class scores", c, s.len())?;
        check_len("class labels", c, l.len())?;
    }
    let per_class_ap = (0..c)
        .map(|k| {
            let s: Vec<f64> = scores.iter().map(|v| v[k]).collect();
            let l: Vec<bool> = labels.iter().map(|v| v[k]).collect();
            average_precision(&s, &l)
        })
        .collect::<Result<Vec<_>>>()?;
    let present: Vec<f64> = per_class_ap.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::Config("no class has a positive video".into()));
    }
    Ok(ZeroShotResult {
        map: present.iter().sum::<f64>() / present.len() as f64,
        per_class_ap,
    })
}

/// Multi-hot rows for label id lists.
pub fn multi_hot(labels: &[Vec<usize>], n_classes: usize) -> Result<Vec<Vec<bool>>> {
    labels
        .iter()
        .map(|ls| {
            let mut row = vec![false; n_classes];
            for &l in ls {
                *row.get_mut(l).ok_or_else(|| Error::Ingest(format!("label {l} outside [0, {n_classes})")))? = true;
            }
            Ok(row)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    /// Position in the gallery.
    pub position: usize,
    pub distance: f64,
}

/// The `k` gallery embeddings closest to `query`, ascending by distance,
/// ties by gallery position.
pub fn nearest_by_embedding(query: &[f64], gallery: &[Vec<f64>], k: usize) -> Result<Vec<Neighbor>> {
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    if gallery.is_empty() || k > gallery.len() {
        return Err(Error::Config(format!("k = {k} but the gallery holds {}", gallery.len())));
    }
    let mut all = gallery
        .iter()
        .enumerate()
        .map(|(position, g)| Ok(Neighbor { position, distance: l2_distance(query, g)? }))
        .collect::<Result<Vec<_>>>()?;
    let cmp = |a: &Neighbor, b: &Neighbor| a.distance.total_cmp(&b.distance).then(a.position.cmp(&b.position));
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, cmp);
        all.truncate(k);
    }
    all.sort_by(cmp);
    Ok(all)
}

pub fn nearest_neighbors<M: FrameEmbedder + ?Sized>(
    model: &M,
    index: &PairIndex,
    query: FrameId,
    gallery: &[FrameId],
    k: usize,
) -> Result<Vec<(FrameId, f64)>> {
    let q = model.embed(index, query)?;
    let g = gallery.iter().map(|&id| model.embed(index, id)).collect::<Result<Vec<_>>>()?;
    Ok(nearest_by_embedding(&q, &g, k)?
        .into_iter()
        .map(|n| (gallery[n.position], n.distance))
        .collect())
}

/// Mean normalized selector weight `n·p` (1 on a uniform video) over frames
/// flagged informative, divided by the mean over the rest.
pub fn informative_weight_ratio<M, F>(model: &M, index: &PairIndex, pairs: &[usize], informative: F) -> Result<f64>
where
    M: FrameEmbedder + ?Sized,
    F: Fn(FrameId) -> bool,
{
    let (mut sum_in, mut n_in, mut sum_out, mut n_out) = (0.0, 0usize, 0.0, 0usize);
    for &pair in pairs {
        for role in [StreamRole::Third, StreamRole::EgoPositive] {
            let modality = role_modality(role);
            let n = index.video(pair, modality).len();
            let Some(scores) = model.selector_scores(index, pair, role)? else {
                return Err(Error::Mode("embedder has no selector".into()));
            };
            for (frame, lw) in log_softmax(&scores).into_iter().enumerate() {
                let w = n as f64 * lw.exp();
                if informative(FrameId { pair, modality, frame }) {
                    sum_in += w;
                    n_in += 1;
                } else {
                    sum_out += w;
                    n_out += 1;
                }
            }
        }
    }
    if n_in == 0 || n_out == 0 {
        return Err(Error::Config("need both informative and uninformative frames".into()));
    }
    Ok((sum_in / n_in as f64) / (sum_out / n_out as f64))
}
